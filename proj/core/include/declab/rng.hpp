#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <string_view>

namespace declab::rng {

using Engine = std::mt19937_64;

/// splitmix64 finalizer: full-avalanche mixing of a 64-bit word.
inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Derives independent, reproducible engine seeds from a master seed plus a
/// sequence of mixed-in words and strings (prompt index, config label, sample
/// index, ...). Plain integer hashing, so the derivation is identical across
/// platforms and independent of any thread schedule.
class SeedDeriver {
public:
  explicit SeedDeriver(std::uint64_t master) : h_(mix64(master + kGamma)) {}

  SeedDeriver& mix(std::uint64_t word) {
    h_ = mix64((h_ ^ word) * kMultiplier + kGamma);
    return *this;
  }

  SeedDeriver& mix(std::string_view text) {
    // FNV-1a over the bytes first, plus the length, so concatenation
    // boundaries matter: ("ab","c") != ("a","bc").
    std::uint64_t fnv = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
      fnv = (fnv ^ c) * 0x100000001b3ULL;
    }
    mix(fnv);
    return mix(static_cast<std::uint64_t>(text.size()));
  }

  std::uint64_t seed() const { return h_; }
  Engine engine() const { return Engine(h_); }

private:
  static constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;
  static constexpr std::uint64_t kMultiplier = 0xff51afd7ed558ccdULL;
  std::uint64_t h_;
};

/// Uniform double in [0, 1), 53 random bits. Hand-rolled so the mapping from
/// engine output to doubles is pinned down (std::uniform_real_distribution is
/// implementation-defined).
inline double uniform_unit(Engine& g) {
  return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

/// Uniform double in (0, 1]; never 0, so log() of it is always finite.
inline double uniform_unit_positive(Engine& g) {
  return static_cast<double>((g() >> 11) + 1) * 0x1.0p-53;
}

/// Standard normal via Box-Muller.
inline double standard_normal(Engine& g) {
  const double u = uniform_unit_positive(g);
  const double v = uniform_unit(g);
  return std::sqrt(-2.0 * std::log(u)) * std::cos(2.0 * std::numbers::pi * v);
}

/// Draws an index from a discrete distribution by inverse-CDF walk.
/// Returns the first index whose cumulative mass exceeds the draw; floating
/// point shortfall at the tail falls back to the last positive-mass index.
inline std::size_t sample_index(std::span<const double> probs, Engine& g) {
  const double u = uniform_unit(g);
  double cum = 0.0;
  std::size_t last_positive = 0;
  bool seen_positive = false;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] > 0.0) {
      last_positive = i;
      seen_positive = true;
      cum += probs[i];
      if (u < cum) return i;
    }
  }
  return seen_positive ? last_positive : probs.size() - 1;
}

}  // namespace declab::rng
