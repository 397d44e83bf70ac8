#pragma once

#include <optional>
#include <vector>

#include "cfverse/matrix.hpp"

// Vector-space view of counterfactual journeys: a path is an origin plus a
// sequence of step vectors, and journeys of different length are compared
// after resampling them into the same number of equally long sections.
namespace cfverse::vec {

struct Path {
    Vector origin;
    std::vector<Vector> steps;

    std::size_t dims() const noexcept { return origin.size(); }
    // origin + sum of steps
    Vector endpoint() const;
    // origin followed by every cumulative position
    std::vector<Vector> vertices() const;

    // Throws ValidationError when steps are missing or of the wrong dimension.
    void validate() const;

    // Steps between consecutive absolute points.
    static Path from_points(const std::vector<Vector>& points);
};

struct NormalizedPath {
    Vector origin;
    // points[j-1] is the cumulative displacement reached at arc length (j/o) * c_L.
    std::vector<Vector> points;
    // Source path endpoint, returned verbatim for the last point when set.
    Vector end;

    std::size_t o() const noexcept { return points.size(); }
    // origin + points[j] (0-based)
    Vector absolute(std::size_t j) const;
};

// Weights over the o comparison points: unit L2 norm, non-increasing.
class WeightVector {
public:
    explicit WeightVector(Vector weights);
    static WeightVector uniform(std::size_t o);

    const Vector& values() const noexcept { return weights_; }
    std::size_t size() const noexcept { return weights_.size(); }

private:
    Vector weights_;
};

inline constexpr std::size_t kDefaultSections = 10;

double l2_norm(ConstRow v);
double l2_distance(ConstRow a, ConstRow b);
double dot(ConstRow a, ConstRow b);

// c_L: sum of step norms.
double path_length(const Path& p);

NormalizedPath normalize_path(const Path& p, std::size_t o = kDefaultSections);

// Minimum L2 distance from an absolute point to the absolute points of q.
double point_to_path_distance(ConstRow point, const NormalizedPath& q);

// First 1-based index i at which point i of a is farther than epsilon from
// every point of b; nullopt if the paths never separate at this threshold.
std::optional<std::size_t> find_branching_point(const NormalizedPath& a, const NormalizedPath& b, double epsilon);

// d_E: sum_j w_j * ||zbar_j^a - zbar_j^b||.
double direction_difference(const NormalizedPath& a, const NormalizedPath& b, const WeightVector& w);
double direction_difference(const NormalizedPath& a, const NormalizedPath& b);

// Share of the direct vector factual->ref_cf that can be travelled while
// still getting closer to cmp_cf: clamp((z_a . z_b) / (z_a . z_a), 0, 1).
double vector_opportunity_potential(ConstRow factual, ConstRow ref_cf, ConstRow cmp_cf);

struct OpportunityMatrix {
    // values[ref][cmp] = l_{ref,cmp}; diagonal is 1.
    std::vector<Vector> values;
    // means[ref] averages values[ref][*] including the diagonal entry.
    Vector means;
};

OpportunityMatrix opportunity_matrix(ConstRow factual, const std::vector<Vector>& counterfactuals);

// Mean per reference over all compared entries, self-entry included.
Vector reference_means(const std::vector<Vector>& values);

}  // namespace cfverse::vec
