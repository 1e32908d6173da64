#pragma once

#include <cstdint>
#include <random>

namespace dynamb {

using Rng = std::mt19937_64;

// Independent stream for (seed, stream, substream); identical arguments give
// identical sequences.
Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0,
             std::uint64_t substream = 0);

}  // namespace dynamb
