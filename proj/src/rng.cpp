#include "dynamb/rng.hpp"

namespace dynamb {

Rng make_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t substream) {
  auto lo = [](std::uint64_t x) { return static_cast<std::uint32_t>(x); };
  auto hi = [](std::uint64_t x) { return static_cast<std::uint32_t>(x >> 32); };
  std::seed_seq seq{lo(seed), hi(seed), lo(stream), hi(stream), lo(substream),
                    hi(substream), 0x9e3779b9u};
  return Rng(seq);
}

}  // namespace dynamb
