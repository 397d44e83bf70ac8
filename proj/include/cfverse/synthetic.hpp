#pragma once

#include <cstdint>
#include <string>

#include "cfverse/dataio.hpp"

namespace cfverse::synthetic {

// Two interleaving half circles with Gaussian jitter. Label 0 is the upper
// moon, label 1 the lower one. Coordinates are raw (not scaled).
RawDataset make_two_moons(std::size_t n, double noise, std::uint64_t seed);

// make_two_moons followed by encode_and_scale.
Dataset two_moons(std::size_t n, double noise, std::uint64_t seed);

std::string to_csv(const RawDataset& raw, const std::string& label_column = "label");

}  // namespace cfverse::synthetic
