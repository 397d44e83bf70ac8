#include "cfverse/bsp.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "cfverse/error.hpp"

namespace cfverse::bsp {

void BspConfig::validate() const {
    if (!(tau > 0.0) || std::isinf(tau)) throw ValidationError("partition size threshold tau must be positive");
}

namespace {

class Partitioner {
public:
    Partitioner(const Matrix& data, std::uint64_t seed) : data_(data), rng_(seed) {}

    std::vector<std::size_t> recurse(const std::vector<std::size_t>& indices, const Vector& from, const Vector& to,
                                     double radius, double tau, bool top_level) {
        if (radius < tau) return top_level ? std::vector<std::size_t>{} : pick(indices);
        const Vector mid = midpoint(from, to);
        const double half = radius / 2.0;
        const auto left = members(indices, from, mid, half);
        const auto right = members(indices, mid, to, half);
        if (left.empty() && right.empty()) return top_level ? std::vector<std::size_t>{} : pick(indices);
        std::vector<std::size_t> out;
        if (!left.empty()) out = recurse(left, from, mid, half, tau, false);
        if (!right.empty()) {
            const auto r = recurse(right, mid, to, half, tau, false);
            out.insert(out.end(), r.begin(), r.end());
        }
        return out;
    }

private:
    std::vector<std::size_t> pick(const std::vector<std::size_t>& indices) {
        if (indices.empty()) return {};
        std::uniform_int_distribution<std::size_t> dist(0, indices.size() - 1);
        return {indices[dist(rng_)]};
    }

    std::vector<std::size_t> members(const std::vector<std::size_t>& indices, const Vector& a, const Vector& b,
                                     double radius) const {
        std::vector<std::size_t> out;
        for (auto i : indices) {
            const auto row = data_.row(i);
            if (vec::l2_distance(row, a) <= radius && vec::l2_distance(row, b) <= radius) out.push_back(i);
        }
        return out;
    }

    static Vector midpoint(const Vector& a, const Vector& b) {
        Vector m(a.size());
        for (std::size_t i = 0; i < a.size(); ++i) m[i] = (a[i] + b[i]) / 2.0;
        return m;
    }

    const Matrix& data_;
    std::mt19937_64 rng_;
};

}  // namespace

BspPath construct_path_bsp(ConstRow factual, ConstRow counterfactual, const Matrix& data, const BspConfig& cfg) {
    cfg.validate();
    if (factual.size() != counterfactual.size()) throw ValidationError("factual and counterfactual dimensions differ");
    if (!data.empty() && data.cols() != factual.size()) throw ValidationError("dataset dimension differs from the factual");
    const Vector start(factual.begin(), factual.end());
    const Vector goal(counterfactual.begin(), counterfactual.end());
    const double span = vec::l2_distance(start, goal);
    if (span == 0.0) throw ValidationError("factual and counterfactual coincide");

    std::vector<std::size_t> all(data.rows());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    Partitioner partitioner(data, cfg.seed);
    auto selected = partitioner.recurse(all, start, goal, span, cfg.tau, true);

    std::vector<std::pair<double, std::size_t>> ranked;
    for (auto i : selected) ranked.emplace_back(vec::l2_distance(data.row(i), goal), i);
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        return a.first > b.first || (a.first == b.first && a.second < b.second);
    });

    BspPath out;
    std::vector<Vector> points{start};
    double last = span;
    for (const auto& [d, i] : ranked) {
        // Strict approach: skip repeats, ties and the target itself.
        if (!(d < last) || d == 0.0) continue;
        out.rows.push_back(i);
        points.push_back(data.row_copy(i));
        last = d;
    }
    points.push_back(goal);
    out.path = vec::Path::from_points(points);
    return out;
}

BspPath construct_path_bsp(ConstRow factual, ConstRow counterfactual, const Dataset& data, const BspConfig& cfg) {
    return construct_path_bsp(factual, counterfactual, data.instances, cfg);
}

}  // namespace cfverse::bsp
