#pragma once

#include <cstdint>
#include <random>

namespace phystrack {

/// Engine used for every random draw in the library. Streams are never shared
/// between threads; each consumer derives its own with make_stream().
using Rng = std::mt19937_64;

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Hashes (master, a, b) into a well-mixed 64-bit seed. Distinct tuples give
/// statistically independent streams.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0) noexcept;

inline Rng make_stream(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0) {
  return Rng(derive_seed(master, a, b));
}

double standard_normal(Rng& rng);

/// Uniform draw on [0, 1).
double uniform01(Rng& rng);

}  // namespace phystrack
