#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace topoinc {

using Rng = std::mt19937_64;

std::uint64_t splitmix64(std::uint64_t x);

// Named substream of a master seed. Each experiment component
// ("dataset", "init", "batch", "inc", "tiebreak", ...) draws from its own
// stream so it can be re-run independently of the others.
std::uint64_t substream_seed(std::uint64_t master, std::string_view name,
                             std::uint64_t i = 0, std::uint64_t j = 0);

inline Rng make_rng(std::uint64_t master, std::string_view name,
                    std::uint64_t i = 0, std::uint64_t j = 0) {
  return Rng(substream_seed(master, name, i, j));
}

// Uniform double in [0, 1) with 53 random bits; independent of the
// standard library's distribution implementation.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Standard normal via Box-Muller on uniform01 (portable across libstdc++/libc++).
double standard_normal(Rng& rng);

}  // namespace topoinc
