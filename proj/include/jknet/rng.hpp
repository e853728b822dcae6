#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace jknet {

using Rng = std::mt19937_64;

// SplitMix64 finalizer; used to derive decorrelated stream seeds.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Independent stream for (seed, index). Trial i of an experiment always uses
// make_stream(master_seed, i), whatever thread runs it.
inline Rng make_stream(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(mix64(seed)),
                    static_cast<std::uint32_t>(mix64(seed) >> 32),
                    static_cast<std::uint32_t>(mix64(index ^ 0xA5A5A5A5ULL)),
                    static_cast<std::uint32_t>(mix64(index ^ 0xA5A5A5A5ULL) >> 32)};
  return Rng(seq);
}

// The std:: distributions are implementation-defined, so the few we need are
// spelled out here to keep outputs identical across standard libraries.

// Uniform on [0, 1) with 53 random bits.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(Rng& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

// Always consumes one draw, including for p <= 0 or p >= 1.
inline bool bernoulli(Rng& rng, double p) { return uniform01(rng) < p; }

// Unbiased integer in [0, n) by rejection.
inline std::size_t uniform_index(Rng& rng, std::size_t n) {
  const std::uint64_t bound = static_cast<std::uint64_t>(n);
  const std::uint64_t threshold = (0 - bound) % bound;
  std::uint64_t r = rng();
  while (r < threshold) r = rng();
  return static_cast<std::size_t>(r % bound);
}

}  // namespace jknet
