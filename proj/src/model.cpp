#include "cfverse/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "cfverse/error.hpp"
#include "csv.hpp"

namespace cfverse {

double Classifier::predict_proba(ConstRow instance, int target_class) const {
    const auto& cls = classes();
    const auto it = std::lower_bound(cls.begin(), cls.end(), target_class);
    if (it == cls.end() || *it != target_class) return 0.0;
    return probabilities(instance)[static_cast<std::size_t>(it - cls.begin())];
}

int Classifier::predict(ConstRow instance) const {
    const auto p = probabilities(instance);
    // max_element returns the first maximum, i.e. the smallest class id.
    const auto it = std::max_element(p.begin(), p.end());
    return classes()[static_cast<std::size_t>(it - p.begin())];
}

KnnClassifier::KnnClassifier(Matrix train, std::vector<int> labels, std::size_t k)
    : train_(std::move(train)), classes_(class_set(labels)), k_(k) {
    if (train_.rows() == 0) throw ValidationError("k-NN classifier needs a non-empty training set");
    if (labels.size() != train_.rows()) throw ValidationError("label count differs from training row count");
    if (k_ == 0 || k_ > train_.rows())
        throw ValidationError("k_model must be in [1, " + std::to_string(train_.rows()) + "]");
    label_index_.reserve(labels.size());
    for (int y : labels)
        label_index_.push_back(
            static_cast<std::size_t>(std::lower_bound(classes_.begin(), classes_.end(), y) - classes_.begin()));
}

Vector KnnClassifier::probabilities(ConstRow instance) const {
    if (instance.size() != train_.cols()) throw ValidationError("instance dimension differs from training data");
    std::vector<std::pair<double, std::size_t>> dist(train_.rows());
    for (std::size_t r = 0; r < train_.rows(); ++r) {
        const auto row = train_.row(r);
        double s = 0.0;
        for (std::size_t c = 0; c < row.size(); ++c) {
            const double d = row[c] - instance[c];
            s += d * d;
        }
        dist[r] = {s, r};
    }
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k_), dist.end());
    Vector probs(classes_.size(), 0.0);
    for (std::size_t i = 0; i < k_; ++i) probs[label_index_[dist[i].second]] += 1.0;
    for (auto& p : probs) p /= static_cast<double>(k_);
    return probs;
}

std::unique_ptr<Classifier> build_knn_classifier(const Dataset& train, std::size_t k_model) {
    return std::make_unique<KnnClassifier>(train.instances, train.labels, k_model);
}

LookupClassifier::LookupClassifier(Matrix instances, std::vector<int> classes, Matrix probabilities)
    : instances_(std::move(instances)), classes_(std::move(classes)), probabilities_(std::move(probabilities)) {
    if (instances_.rows() != probabilities_.rows())
        throw ValidationError("predictions have " + std::to_string(probabilities_.rows()) + " rows but the dataset has " +
                              std::to_string(instances_.rows()));
    if (probabilities_.cols() != classes_.size()) throw ValidationError("predictions column count differs from class count");
    if (!std::is_sorted(classes_.begin(), classes_.end()) ||
        std::adjacent_find(classes_.begin(), classes_.end()) != classes_.end())
        throw ValidationError("class ids in the predictions header must be distinct");
    for (std::size_t r = 0; r < probabilities_.rows(); ++r) {
        double total = 0.0;
        for (double p : probabilities_.row(r)) {
            if (!(p >= 0.0 && p <= 1.0))
                throw ValidationError("probability outside [0,1] in predictions row " + std::to_string(r + 1));
            total += p;
        }
        if (std::abs(total - 1.0) > 1e-6)
            throw ValidationError("predictions row " + std::to_string(r + 1) + " sums to " + std::to_string(total));
        // First occurrence wins for duplicate instances.
        index_.emplace(instances_.row_copy(r), r);
    }
}

Vector LookupClassifier::probabilities(ConstRow instance) const {
    const auto it = index_.find(Vector(instance.begin(), instance.end()));
    if (it == index_.end()) throw NotFoundError("instance is not a row of the dataset the predictions were loaded for");
    return probabilities_.row_copy(it->second);
}

std::unique_ptr<Classifier> parse_predictions(const std::string& csv_text, const Dataset& data) {
    const auto records = detail::split_csv(csv_text);
    if (records.empty()) throw ValidationError("predictions file has no header");
    std::vector<std::pair<int, std::size_t>> header;
    for (std::size_t c = 0; c < records.front().size(); ++c) {
        const auto id = detail::parse_int(records.front()[c]);
        if (!id) throw ParseError(0, records.front()[c], "class id header must be an integer");
        header.emplace_back(*id, c);
    }
    std::sort(header.begin(), header.end());
    std::vector<int> classes;
    for (const auto& [id, _] : header) classes.push_back(id);

    Matrix probs(records.size() - 1, header.size());
    for (std::size_t r = 1; r < records.size(); ++r) {
        if (records[r].size() != header.size())
            throw ParseError(r, "<record>", "expected " + std::to_string(header.size()) + " probabilities");
        for (std::size_t j = 0; j < header.size(); ++j) {
            const auto v = detail::parse_double(records[r][header[j].second]);
            if (!v) throw ParseError(r, records.front()[header[j].second], "not a probability");
            probs(r - 1, j) = *v;
        }
    }
    return std::make_unique<LookupClassifier>(data.instances, std::move(classes), std::move(probs));
}

std::unique_ptr<Classifier> load_predictions(const std::filesystem::path& path, const Dataset& data) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open predictions file: " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_predictions(ss.str(), data);
}

}  // namespace cfverse
