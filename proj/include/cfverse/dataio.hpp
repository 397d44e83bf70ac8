#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cfverse/matrix.hpp"

namespace cfverse {

enum class FeatureKind { numeric, categorical };
enum class Monotonicity { free, non_decreasing, non_increasing };

std::string to_string(FeatureKind kind);
std::string to_string(Monotonicity m);
FeatureKind parse_feature_kind(const std::string& text);
Monotonicity parse_monotonicity(const std::string& text);

struct FeatureSpec {
    std::string name;
    FeatureKind kind = FeatureKind::numeric;
    Monotonicity monotonicity = Monotonicity::free;
    bool is_mutable = true;
    // Category vocabulary in first-seen order; filled by fitting for
    // categorical features, may be pre-declared in the schema file.
    std::vector<std::string> categories;
};

class FeatureSchema {
public:
    FeatureSchema() = default;
    explicit FeatureSchema(std::vector<FeatureSpec> features);

    const std::vector<FeatureSpec>& features() const noexcept { return features_; }
    std::vector<FeatureSpec>& features() noexcept { return features_; }
    std::size_t size() const noexcept { return features_.size(); }
    std::optional<std::size_t> index_of(const std::string& name) const;

    // Throws SchemaError on duplicate names.
    void validate() const;

    // Every feature free and mutable, all numeric.
    static FeatureSchema all_numeric(const std::vector<std::string>& names);

private:
    std::vector<FeatureSpec> features_;
};

// Sidecar schema: JSON object keyed by feature name, in column order:
//   {"age": {"kind": "numeric", "monotonicity": "non-decreasing", "mutable": true}, ...}
FeatureSchema load_schema(const std::filesystem::path& path);
FeatureSchema parse_schema(const std::string& json_text);

// Unencoded data as parsed from CSV. One column per schema feature.
struct RawColumn {
    std::vector<double> numeric;        // used when the feature is numeric
    std::vector<std::string> category;  // used when the feature is categorical
};

struct RawDataset {
    FeatureSchema schema;
    std::vector<RawColumn> columns;
    std::vector<int> labels;

    std::size_t rows() const noexcept { return labels.size(); }
};

// Links an encoded column back to the raw feature it came from.
struct EncodedColumn {
    std::size_t feature = 0;
    std::optional<std::string> category;  // set for one-hot columns
};

// Fitted numeric ranges and vocabularies; applies the same encoding to new data.
class Encoder {
public:
    static Encoder fit(const RawDataset& raw);

    // Encodes rows; throws ValidationError on an unseen category or a
    // non-finite numeric value.
    Matrix transform(const RawDataset& raw) const;

    const FeatureSchema& schema() const noexcept { return schema_; }
    const std::vector<EncodedColumn>& columns() const noexcept { return columns_; }

private:
    FeatureSchema schema_;
    std::vector<double> min_;
    std::vector<double> max_;
    std::vector<EncodedColumn> columns_;
};

struct Dataset {
    Matrix instances;
    std::vector<int> labels;
    FeatureSchema schema;
    std::vector<EncodedColumn> encoded_to_raw;

    std::size_t rows() const noexcept { return instances.rows(); }
    std::size_t dims() const noexcept { return instances.cols(); }

    // Per encoded column monotonicity / mutability, inherited from the raw feature.
    Monotonicity column_monotonicity(std::size_t col) const;
    bool column_mutable(std::size_t col) const;

    // Wraps an already numeric matrix (all columns free, mutable, numeric).
    static Dataset from_matrix(Matrix instances, std::vector<int> labels);
};

RawDataset load_csv(const std::filesystem::path& path, const FeatureSchema& schema,
                    const std::string& label_column);
RawDataset parse_csv(const std::string& text, const FeatureSchema& schema,
                     const std::string& label_column);

Dataset encode_and_scale(const RawDataset& raw);

// Sorted distinct labels.
std::vector<int> class_set(const std::vector<int>& labels);

}  // namespace cfverse
