#pragma once

#include <cstdint>
#include <vector>

#include "cfverse/dataio.hpp"
#include "cfverse/vector_multiverse.hpp"

namespace cfverse::bsp {

struct BspConfig {
    double tau = 0.1;        // partition size threshold
    std::uint64_t seed = 0;  // drives the pick inside exhausted partitions

    void validate() const;
};

struct BspPath {
    vec::Path path;
    // Dataset rows visited between the factual and the counterfactual.
    std::vector<std::size_t> rows;
};

// Post-hoc path through existing data points: the segment factual->counterfactual
// is halved recursively, each half keeping the points within the (halved)
// radius of both of its ends, until partitions empty out or the radius drops
// below tau. Selected points are ordered by decreasing distance to the
// counterfactual so every step moves strictly closer to it.
BspPath construct_path_bsp(ConstRow factual, ConstRow counterfactual, const Matrix& data, const BspConfig& cfg);
BspPath construct_path_bsp(ConstRow factual, ConstRow counterfactual, const Dataset& data, const BspConfig& cfg);

}  // namespace cfverse::bsp
