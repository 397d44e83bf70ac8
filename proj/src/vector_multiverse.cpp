#include "cfverse/vector_multiverse.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "cfverse/error.hpp"

namespace cfverse::vec {

double dot(ConstRow a, ConstRow b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double l2_norm(ConstRow v) { return std::sqrt(dot(v, v)); }

double l2_distance(ConstRow a, ConstRow b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return std::sqrt(s);
}

Vector Path::endpoint() const {
    Vector end = origin;
    for (const auto& z : steps)
        for (std::size_t i = 0; i < end.size(); ++i) end[i] += z[i];
    return end;
}

std::vector<Vector> Path::vertices() const {
    std::vector<Vector> out{origin};
    out.reserve(steps.size() + 1);
    for (const auto& z : steps) {
        Vector next = out.back();
        for (std::size_t i = 0; i < next.size(); ++i) next[i] += z[i];
        out.push_back(std::move(next));
    }
    return out;
}

void Path::validate() const {
    if (steps.empty()) throw ValidationError("a path needs at least one step");
    for (std::size_t s = 0; s < steps.size(); ++s)
        if (steps[s].size() != origin.size())
            throw ValidationError("step " + std::to_string(s + 1) + " has dimension " + std::to_string(steps[s].size()) +
                                  ", expected " + std::to_string(origin.size()));
}

Path Path::from_points(const std::vector<Vector>& points) {
    if (points.size() < 2) throw ValidationError("a path needs at least two points");
    Path p{points.front(), {}};
    for (std::size_t k = 1; k < points.size(); ++k) {
        Vector z(points[k].size());
        for (std::size_t i = 0; i < z.size(); ++i) z[i] = points[k][i] - points[k - 1][i];
        p.steps.push_back(std::move(z));
    }
    p.validate();
    return p;
}

Vector NormalizedPath::absolute(std::size_t j) const {
    if (j + 1 == points.size() && end.size() == origin.size()) return end;
    Vector out = origin;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += points[j][i];
    return out;
}

WeightVector::WeightVector(Vector weights) : weights_(std::move(weights)) {
    if (weights_.empty()) throw ValidationError("weight vector must not be empty");
    if (std::abs(l2_norm(weights_) - 1.0) > 1e-9) throw ValidationError("weight vector must have unit L2 norm");
    for (std::size_t j = 1; j < weights_.size(); ++j)
        if (weights_[j] > weights_[j - 1]) throw ValidationError("weight vector must be non-increasing");
}

WeightVector WeightVector::uniform(std::size_t o) {
    if (o == 0) throw ValidationError("o must be positive");
    return WeightVector(Vector(o, 1.0 / std::sqrt(static_cast<double>(o))));
}

double path_length(const Path& p) {
    double total = 0.0;
    for (const auto& z : p.steps) total += l2_norm(z);
    return total;
}

NormalizedPath normalize_path(const Path& p, std::size_t o) {
    p.validate();
    if (o == 0) throw ValidationError("number of sections o must be positive");
    std::vector<double> norms;
    norms.reserve(p.steps.size());
    for (const auto& z : p.steps) norms.push_back(l2_norm(z));
    const double total = std::accumulate(norms.begin(), norms.end(), 0.0);
    if (!(total > 0.0)) throw ValidationError("cannot normalize a zero-length path");

    NormalizedPath out{p.origin, {}, p.endpoint()};
    out.points.reserve(o);
    const auto m = p.dims();
    for (std::size_t j = 1; j <= o; ++j) {
        Vector acc(m, 0.0);
        if (j == o) {
            // The last section ends on the endpoint without rounding residue.
            for (const auto& z : p.steps)
                for (std::size_t i = 0; i < m; ++i) acc[i] += z[i];
            out.points.push_back(std::move(acc));
            continue;
        }
        double remaining = static_cast<double>(j) / static_cast<double>(o) * total;
        for (std::size_t s = 0; s < p.steps.size() && remaining > 0.0; ++s) {
            const double len = norms[s];
            if (len == 0.0) continue;
            const double frac = remaining >= len ? 1.0 : remaining / len;
            for (std::size_t i = 0; i < m; ++i) acc[i] += frac * p.steps[s][i];
            remaining -= len;
        }
        out.points.push_back(std::move(acc));
    }
    return out;
}

double point_to_path_distance(ConstRow point, const NormalizedPath& q) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < q.o(); ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < point.size(); ++i) {
            const double d = q.origin[i] + q.points[j][i] - point[i];
            s += d * d;
        }
        best = std::min(best, s);
    }
    return std::sqrt(best);
}

std::optional<std::size_t> find_branching_point(const NormalizedPath& a, const NormalizedPath& b, double epsilon) {
    if (!(epsilon > 0.0)) throw ValidationError("branching threshold epsilon must be positive");
    if (a.o() != b.o()) throw ValidationError("paths must be normalized to the same o");
    if (a.origin.size() != b.origin.size()) throw ValidationError("paths must have the same dimension");
    for (std::size_t i = 0; i < a.o(); ++i) {
        if (point_to_path_distance(a.absolute(i), b) > epsilon) return i + 1;
    }
    return std::nullopt;
}

double direction_difference(const NormalizedPath& a, const NormalizedPath& b, const WeightVector& w) {
    if (a.o() != b.o() || a.o() != w.size())
        throw ValidationError("direction difference needs paths and weights of the same length o");
    if (a.origin.size() != b.origin.size()) throw ValidationError("paths must have the same dimension");
    double total = 0.0;
    for (std::size_t j = 0; j < a.o(); ++j) total += w.values()[j] * l2_distance(a.points[j], b.points[j]);
    return total;
}

double direction_difference(const NormalizedPath& a, const NormalizedPath& b) {
    return direction_difference(a, b, WeightVector::uniform(a.o()));
}

double vector_opportunity_potential(ConstRow factual, ConstRow ref_cf, ConstRow cmp_cf) {
    if (factual.size() != ref_cf.size() || factual.size() != cmp_cf.size())
        throw ValidationError("factual and counterfactuals must have the same dimension");
    double za_za = 0.0;
    double za_zb = 0.0;
    for (std::size_t i = 0; i < factual.size(); ++i) {
        const double za = ref_cf[i] - factual[i];
        const double zb = cmp_cf[i] - factual[i];
        za_za += za * za;
        za_zb += za * zb;
    }
    if (za_za == 0.0) throw ValidationError("reference counterfactual coincides with the factual instance");
    return std::clamp(za_zb / za_za, 0.0, 1.0);
}

Vector reference_means(const std::vector<Vector>& values) {
    Vector means;
    means.reserve(values.size());
    for (const auto& row : values)
        means.push_back(row.empty() ? 0.0 : std::accumulate(row.begin(), row.end(), 0.0) / static_cast<double>(row.size()));
    return means;
}

OpportunityMatrix opportunity_matrix(ConstRow factual, const std::vector<Vector>& counterfactuals) {
    if (counterfactuals.size() < 2) throw ValidationError("opportunity matrix needs at least two counterfactuals");
    const auto n = counterfactuals.size();
    OpportunityMatrix out;
    out.values.assign(n, Vector(n, 0.0));
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = 0; b < n; ++b) {
            out.values[a][b] = a == b ? 1.0 : vector_opportunity_potential(factual, counterfactuals[a], counterfactuals[b]);
        }
    }
    out.means = reference_means(out.values);
    return out;
}

}  // namespace cfverse::vec
