#pragma once

// Deterministic random numbers.
//
// Everything stochastic in terrabench draws from SplitMix64 used as a
// counter-based generator: the k-th output of a stream seeded with s is
// mix64(s + k * 0x9E3779B97F4A7C15). Distributions are derived here rather
// than through <random> so that sequences are identical across standard
// library implementations.

#include <cmath>
#include <cstdint>
#include <numbers>

namespace terrabench {

/// SplitMix64 finalizer (Steele, Lea & Flood 2014).
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Order-sensitive combination of two 64-bit values into a new seed.
constexpr std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b) noexcept {
  return mix64(mix64(a) ^ (b + 0x9E3779B97F4A7C15ULL + (a << 6) + (a >> 2)));
}

namespace detail {
__extension__ typedef unsigned __int128 u128;
}  // namespace detail

class Rng {
 public:
  static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

  explicit constexpr Rng(std::uint64_t seed = 0) noexcept : state_(seed) {}

  constexpr std::uint64_t next() noexcept {
    state_ += kGamma;
    return mix64(state_);
  }

  /// Uniform in [0, 1) with 53 random bits.
  constexpr double uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double low, double high) noexcept { return low + (high - low) * uniform(); }

  /// Uniform integer in [0, n). Lemire's multiply-shift; bias is below 2^-64 * n.
  std::uint64_t below(std::uint64_t n) noexcept {
    return static_cast<std::uint64_t>((static_cast<detail::u128>(next()) * n) >> 64);
  }

  /// Standard normal via Box-Muller (one output per call, two uniforms consumed).
  double normal() noexcept {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  bool bernoulli(double p = 0.5) noexcept { return uniform() < p; }

 private:
  std::uint64_t state_;
};

}  // namespace terrabench
