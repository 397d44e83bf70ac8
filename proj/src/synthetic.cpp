#include "cfverse/synthetic.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "cfverse/error.hpp"

namespace cfverse::synthetic {

RawDataset make_two_moons(std::size_t n, double noise, std::uint64_t seed) {
    if (n < 2) throw ValidationError("two moons needs at least two points");
    if (!(noise >= 0.0)) throw ValidationError("noise must be non-negative");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> jitter(0.0, 1.0);

    RawDataset raw;
    raw.schema = FeatureSchema::all_numeric({"x1", "x2"});
    raw.columns.resize(2);
    const std::size_t upper = n / 2;
    const std::size_t lower = n - upper;
    auto emit = [&](double x, double y, int label) {
        raw.columns[0].numeric.push_back(x + noise * jitter(rng));
        raw.columns[1].numeric.push_back(y + noise * jitter(rng));
        raw.labels.push_back(label);
    };
    // Interleave the moons so row order does not group classes.
    for (std::size_t i = 0; i < std::max(upper, lower); ++i) {
        if (i < upper) {
            const double t = std::numbers::pi * static_cast<double>(i) / static_cast<double>(std::max<std::size_t>(upper - 1, 1));
            emit(std::cos(t), std::sin(t), 0);
        }
        if (i < lower) {
            const double t = std::numbers::pi * static_cast<double>(i) / static_cast<double>(std::max<std::size_t>(lower - 1, 1));
            emit(1.0 - std::cos(t), 0.5 - std::sin(t), 1);
        }
    }
    return raw;
}

Dataset two_moons(std::size_t n, double noise, std::uint64_t seed) {
    return encode_and_scale(make_two_moons(n, noise, seed));
}

std::string to_csv(const RawDataset& raw, const std::string& label_column) {
    std::ostringstream out;
    out.precision(17);
    for (const auto& f : raw.schema.features()) out << f.name << ',';
    out << label_column << '\n';
    for (std::size_t r = 0; r < raw.rows(); ++r) {
        for (std::size_t f = 0; f < raw.schema.size(); ++f) {
            if (raw.schema.features()[f].kind == FeatureKind::numeric)
                out << raw.columns[f].numeric[r];
            else
                out << raw.columns[f].category[r];
            out << ',';
        }
        out << raw.labels[r] << '\n';
    }
    return out.str();
}

}  // namespace cfverse::synthetic
