#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace graphaug {

using Rng = std::mt19937_64;

/// Derives an independent generator for a named purpose ("split", "masks",
/// "gumbel", "triplets", ...) from one top-level seed. Mixing uses FNV-1a
/// over the name followed by a splitmix64 finalizer, so streams for
/// different names or counters do not overlap in practice.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view stream, std::uint64_t counter = 0);

inline Rng make_rng(std::uint64_t seed, std::string_view stream, std::uint64_t counter = 0) {
  return Rng(derive_seed(seed, stream, counter));
}

}  // namespace graphaug
