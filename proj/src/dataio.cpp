#include "cfverse/dataio.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "cfverse/error.hpp"
#include "csv.hpp"

namespace cfverse {

using ordered_json = nlohmann::ordered_json;
using detail::trim;
using detail::split_csv;
using detail::parse_double;
using detail::parse_int;

std::string to_string(FeatureKind kind) {
    return kind == FeatureKind::numeric ? "numeric" : "categorical";
}

std::string to_string(Monotonicity m) {
    switch (m) {
        case Monotonicity::free: return "free";
        case Monotonicity::non_decreasing: return "non-decreasing";
        case Monotonicity::non_increasing: return "non-increasing";
    }
    return "free";
}

FeatureKind parse_feature_kind(const std::string& text) {
    if (text == "numeric") return FeatureKind::numeric;
    if (text == "categorical") return FeatureKind::categorical;
    throw SchemaError(text, "unknown feature kind (expected numeric|categorical)");
}

Monotonicity parse_monotonicity(const std::string& text) {
    if (text == "free") return Monotonicity::free;
    if (text == "non-decreasing" || text == "non_decreasing" || text == "increasing")
        return Monotonicity::non_decreasing;
    if (text == "non-increasing" || text == "non_increasing" || text == "decreasing")
        return Monotonicity::non_increasing;
    throw SchemaError(text, "unknown monotonicity (expected free|non-decreasing|non-increasing)");
}

FeatureSchema::FeatureSchema(std::vector<FeatureSpec> features) : features_(std::move(features)) {
    validate();
}

std::optional<std::size_t> FeatureSchema::index_of(const std::string& name) const {
    for (std::size_t i = 0; i < features_.size(); ++i)
        if (features_[i].name == name) return i;
    return std::nullopt;
}

void FeatureSchema::validate() const {
    std::unordered_set<std::string> seen;
    for (const auto& f : features_) {
        if (f.name.empty()) throw SchemaError("<empty>", "feature name must not be empty");
        if (!seen.insert(f.name).second) throw SchemaError(f.name, "duplicate feature name");
    }
}

FeatureSchema FeatureSchema::all_numeric(const std::vector<std::string>& names) {
    std::vector<FeatureSpec> features;
    features.reserve(names.size());
    for (const auto& n : names) features.push_back(FeatureSpec{.name = n});
    return FeatureSchema(std::move(features));
}

FeatureSchema parse_schema(const std::string& json_text) {
    ordered_json doc;
    try {
        doc = ordered_json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw SchemaError("<document>", e.what());
    }
    // Accept {"features": {...}} as well as the bare mapping.
    if (doc.is_object() && doc.contains("features") && doc["features"].is_object()) doc = doc["features"];
    if (!doc.is_object()) throw SchemaError("<document>", "expected an object keyed by feature name");

    std::vector<FeatureSpec> features;
    for (const auto& [name, entry] : doc.items()) {
        FeatureSpec spec;
        spec.name = name;
        if (entry.is_string()) {
            spec.kind = parse_feature_kind(entry.get<std::string>());
        } else if (entry.is_object()) {
            spec.kind = parse_feature_kind(entry.value("kind", std::string("numeric")));
            spec.monotonicity = parse_monotonicity(entry.value("monotonicity", std::string("free")));
            spec.is_mutable = entry.value("mutable", true);
            if (entry.contains("categories")) spec.categories = entry["categories"].get<std::vector<std::string>>();
        } else {
            throw SchemaError(name, "entry must be a kind string or an object");
        }
        features.push_back(std::move(spec));
    }
    return FeatureSchema(std::move(features));
}

FeatureSchema load_schema(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open schema file: " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_schema(ss.str());
}

RawDataset parse_csv(const std::string& text, const FeatureSchema& schema, const std::string& label_column) {
    schema.validate();
    const auto records = split_csv(text);
    if (records.empty()) throw SchemaError(label_column, "missing header row");

    std::vector<std::string> header;
    for (const auto& h : records.front()) header.push_back(trim(h));
    auto column_index = [&](const std::string& name) -> std::size_t {
        const auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) throw SchemaError(name);
        return static_cast<std::size_t>(it - header.begin());
    };

    std::vector<std::size_t> feature_cols;
    for (const auto& f : schema.features()) feature_cols.push_back(column_index(f.name));
    const std::size_t label_col = column_index(label_column);

    RawDataset raw;
    raw.schema = schema;
    raw.columns.resize(schema.size());
    for (std::size_t r = 1; r < records.size(); ++r) {
        const auto& rec = records[r];
        if (rec.size() != header.size())
            throw ParseError(r, "<record>", "expected " + std::to_string(header.size()) + " fields, got " +
                                                std::to_string(rec.size()));
        for (std::size_t f = 0; f < schema.size(); ++f) {
            const auto& spec = schema.features()[f];
            const auto& cell = rec[feature_cols[f]];
            if (spec.kind == FeatureKind::numeric) {
                const auto v = parse_double(cell);
                if (!v) throw ParseError(r, spec.name, "not a number: '" + cell + "'");
                raw.columns[f].numeric.push_back(*v);
            } else {
                auto v = trim(cell);
                if (v.empty()) throw ParseError(r, spec.name, "missing category");
                raw.columns[f].category.push_back(std::move(v));
            }
        }
        const auto label = parse_int(rec[label_col]);
        if (!label) throw ParseError(r, label_column, "label must be an integer class id: '" + rec[label_col] + "'");
        raw.labels.push_back(*label);
    }

    // Vocabulary collection: declared categories first, then first-seen order.
    for (std::size_t f = 0; f < schema.size(); ++f) {
        auto& spec = raw.schema.features()[f];
        if (spec.kind != FeatureKind::categorical) continue;
        for (const auto& c : raw.columns[f].category)
            if (std::find(spec.categories.begin(), spec.categories.end(), c) == spec.categories.end())
                spec.categories.push_back(c);
    }
    return raw;
}

RawDataset load_csv(const std::filesystem::path& path, const FeatureSchema& schema, const std::string& label_column) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open data file: " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_csv(ss.str(), schema, label_column);
}

Encoder Encoder::fit(const RawDataset& raw) {
    if (raw.rows() == 0) throw ValidationError("cannot encode an empty dataset");
    Encoder enc;
    enc.schema_ = raw.schema;
    const auto n_features = raw.schema.size();
    enc.min_.assign(n_features, 0.0);
    enc.max_.assign(n_features, 0.0);
    for (std::size_t f = 0; f < n_features; ++f) {
        auto& spec = enc.schema_.features()[f];
        if (spec.kind == FeatureKind::numeric) {
            const auto& col = raw.columns[f].numeric;
            for (std::size_t r = 0; r < col.size(); ++r)
                if (!std::isfinite(col[r]))
                    throw ParseError(r + 1, spec.name, "non-finite numeric value");
            const auto [lo, hi] = std::minmax_element(col.begin(), col.end());
            enc.min_[f] = *lo;
            enc.max_[f] = *hi;
            enc.columns_.push_back({f, std::nullopt});
        } else {
            for (const auto& c : raw.columns[f].category)
                if (std::find(spec.categories.begin(), spec.categories.end(), c) == spec.categories.end())
                    spec.categories.push_back(c);
            for (const auto& c : spec.categories) enc.columns_.push_back({f, c});
        }
    }
    return enc;
}

Matrix Encoder::transform(const RawDataset& raw) const {
    if (raw.schema.size() != schema_.size()) throw SchemaError("<schema>", "feature count differs from fitted schema");
    Matrix out(raw.rows(), columns_.size());
    std::size_t col = 0;
    for (std::size_t f = 0; f < schema_.size(); ++f) {
        const auto& spec = schema_.features()[f];
        if (spec.kind == FeatureKind::numeric) {
            const auto& values = raw.columns[f].numeric;
            const double range = max_[f] - min_[f];
            for (std::size_t r = 0; r < values.size(); ++r) {
                if (!std::isfinite(values[r])) throw ParseError(r + 1, spec.name, "non-finite numeric value");
                // Constant columns collapse to 0.
                out(r, col) = range > 0.0 ? std::clamp((values[r] - min_[f]) / range, 0.0, 1.0) : 0.0;
            }
            ++col;
        } else {
            const auto& values = raw.columns[f].category;
            for (std::size_t r = 0; r < values.size(); ++r) {
                const auto it = std::find(spec.categories.begin(), spec.categories.end(), values[r]);
                if (it == spec.categories.end())
                    throw ValidationError("unknown category '" + values[r] + "' for feature '" + spec.name +
                                          "' at row " + std::to_string(r + 1));
                out(r, col + static_cast<std::size_t>(it - spec.categories.begin())) = 1.0;
            }
            col += spec.categories.size();
        }
    }
    return out;
}

Monotonicity Dataset::column_monotonicity(std::size_t col) const {
    if (encoded_to_raw.empty()) return Monotonicity::free;
    return schema.features()[encoded_to_raw[col].feature].monotonicity;
}

bool Dataset::column_mutable(std::size_t col) const {
    if (encoded_to_raw.empty()) return true;
    return schema.features()[encoded_to_raw[col].feature].is_mutable;
}

Dataset Dataset::from_matrix(Matrix instances, std::vector<int> labels) {
    if (labels.size() != instances.rows()) throw ValidationError("label count differs from row count");
    std::vector<std::string> names;
    for (std::size_t c = 0; c < instances.cols(); ++c) names.push_back("x" + std::to_string(c));
    Dataset d;
    d.schema = FeatureSchema::all_numeric(names);
    for (std::size_t c = 0; c < instances.cols(); ++c) d.encoded_to_raw.push_back({c, std::nullopt});
    d.instances = std::move(instances);
    d.labels = std::move(labels);
    return d;
}

Dataset encode_and_scale(const RawDataset& raw) {
    const auto enc = Encoder::fit(raw);
    Dataset d;
    d.instances = enc.transform(raw);
    d.labels = raw.labels;
    d.schema = enc.schema();
    d.encoded_to_raw = enc.columns();
    return d;
}

std::vector<int> class_set(const std::vector<int>& labels) {
    std::set<int> s(labels.begin(), labels.end());
    return {s.begin(), s.end()};
}

}  // namespace cfverse
