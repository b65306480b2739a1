#pragma once

/// \file rng.hpp
/// \brief Counter-based generator for the synthetic experiments.
///
/// Draw i of stream s is splitmix64_mix(key(s) + (i + 1)·0x9E3779B97F4A7C15),
/// i.e. SplitMix64 (Steele, Lea, Flood 2014) evaluated at an explicit counter.
/// A stream key is derived from (seed, phase) so every experiment phase owns
/// an independent sequence and changing one phase's draw count leaves the
/// others untouched.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>

#include "idiff/linalg/dense.hpp"

namespace idiff::bench {

inline constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ULL;

/// SplitMix64 output function (multipliers 0xBF58476D1CE4E5B9, 0x94D049BB133111EB).
constexpr std::uint64_t splitmix64_mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// 64-bit FNV-1a (offset 0xCBF29CE484222325, prime 0x100000001B3).
constexpr std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ULL;
  }
  return h;
}

class CounterRng {
 public:
  explicit CounterRng(std::uint64_t key) : key_(key) {}

  /// Stream for one experiment phase, e.g. stream(seed, "ridge/design").
  static CounterRng stream(std::uint64_t seed, std::string_view phase) {
    return CounterRng(splitmix64_mix(splitmix64_mix(seed) ^ fnv1a(phase)));
  }

  std::uint64_t next_u64() {
    ++counter_;
    return splitmix64_mix(key_ + counter_ * kGoldenGamma);
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller; the second variate of each pair is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
    has_spare_ = true;
    return r * std::cos(2.0 * std::numbers::pi * u2);
  }

  DenseVector normal_vector(std::size_t n, double scale = 1.0) {
    DenseVector v(n);
    for (double& x : v) x = scale * normal();
    return v;
  }

  /// Column-major fill, so the draw order is fixed by (rows, cols).
  DenseMatrix normal_matrix(std::size_t rows, std::size_t cols, double scale = 1.0) {
    DenseMatrix a(rows, cols);
    for (std::size_t j = 0; j < cols; ++j)
      for (std::size_t i = 0; i < rows; ++i) a(i, j) = scale * normal();
    return a;
  }

  [[nodiscard]] std::uint64_t draws() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace idiff::bench
