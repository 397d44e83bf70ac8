#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <vector>

#include "cfverse/dataio.hpp"
#include "cfverse/matrix.hpp"

namespace cfverse {

// Probabilistic classifier consumed by multiverse construction. Only class
// labels and f~(x) >= t tests are needed downstream, so any model that can
// produce a class distribution per instance plugs in here.
class Classifier {
public:
    virtual ~Classifier() = default;

    // Sorted class identifiers; probabilities() is indexed in this order.
    virtual const std::vector<int>& classes() const = 0;
    virtual Vector probabilities(ConstRow instance) const = 0;

    double predict_proba(ConstRow instance, int target_class) const;
    // argmax of probabilities(); ties go to the smallest class id.
    int predict(ConstRow instance) const;
};

// Class frequencies among the k nearest training rows (L2, ties by row index).
class KnnClassifier final : public Classifier {
public:
    KnnClassifier(Matrix train, std::vector<int> labels, std::size_t k);

    const std::vector<int>& classes() const override { return classes_; }
    Vector probabilities(ConstRow instance) const override;
    std::size_t k() const noexcept { return k_; }

private:
    Matrix train_;
    std::vector<std::size_t> label_index_;
    std::vector<int> classes_;
    std::size_t k_;
};

std::unique_ptr<Classifier> build_knn_classifier(const Dataset& train, std::size_t k_model);

// Answers by exact lookup of dataset rows. Instances outside the dataset are an error.
class LookupClassifier final : public Classifier {
public:
    LookupClassifier(Matrix instances, std::vector<int> classes, Matrix probabilities);

    const std::vector<int>& classes() const override { return classes_; }
    Vector probabilities(ConstRow instance) const override;

private:
    Matrix instances_;
    std::vector<int> classes_;
    Matrix probabilities_;
    std::map<std::vector<double>, std::size_t> index_;
};

// CSV with a header of class ids and one probability row per dataset row.
std::unique_ptr<Classifier> load_predictions(const std::filesystem::path& path, const Dataset& data);
std::unique_ptr<Classifier> parse_predictions(const std::string& csv_text, const Dataset& data);

}  // namespace cfverse
