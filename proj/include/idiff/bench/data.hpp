#pragma once

/// \file data.hpp
/// \brief Seeded Gaussian-blob classification data.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "idiff/bench/rng.hpp"
#include "idiff/errors.hpp"
#include "idiff/linalg/dense.hpp"

namespace idiff::bench {

struct ClassificationData {
  DenseMatrix features;              // m × p
  std::vector<std::size_t> labels;   // m entries in [0, k)
  std::vector<std::size_t> informative;  // indices of the informative coordinates
};

/// Separation scale of the class centers on informative coordinates.
inline constexpr double kCenterScale = 2.0;

/// Number of informative coordinates: round(frac·p), at least 1.
inline std::size_t informative_count(std::size_t p, double informative_frac) {
  const auto n = static_cast<std::size_t>(std::llround(informative_frac * static_cast<double>(p)));
  return std::max<std::size_t>(1, std::min(n, p));
}

/// Sample i has label i mod k. Class c has center μ_c with μ_c[j] ~ 2·N(0, 1)
/// on the first round(frac·p) coordinates and 0 elsewhere; a sample is its
/// center plus N(0, 1) noise on every coordinate.
///
/// Centers come from the stream (seed, "classification/centers") and noise
/// from (seed, "classification/samples/<split>"), so different splits share
/// the same centers.
inline ClassificationData gen_classification(std::uint64_t seed, std::size_t m, std::size_t p, std::size_t k,
                                             double informative_frac, std::string_view split = "train") {
  if (!(informative_frac > 0.0 && informative_frac <= 1.0)) {
    throw DomainError("gen_classification: informative_frac must lie in (0, 1]");
  }
  detail::require_dims(m > 0 && p > 0 && k > 0, "gen_classification: m, p and k must be positive");
  const std::size_t n_inf = informative_count(p, informative_frac);

  CounterRng center_rng = CounterRng::stream(seed, "classification/centers");
  DenseMatrix centers(k, p);
  for (std::size_t c = 0; c < k; ++c)
    for (std::size_t j = 0; j < n_inf; ++j) centers(c, j) = kCenterScale * center_rng.normal();

  CounterRng sample_rng = CounterRng::stream(seed, "classification/samples/" + std::string(split));
  ClassificationData out{DenseMatrix(m, p), std::vector<std::size_t>(m), {}};
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t c = i % k;
    out.labels[i] = c;
    for (std::size_t j = 0; j < p; ++j) out.features(i, j) = centers(c, j) + sample_rng.normal();
  }
  for (std::size_t j = 0; j < n_inf; ++j) out.informative.push_back(j);
  return out;
}

/// m × k one-hot matrix of the labels, column-major.
inline DenseMatrix one_hot(const std::vector<std::size_t>& labels, std::size_t k) {
  DenseMatrix y(labels.size(), k);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    detail::require_dims(labels[i] < k, "one_hot: label out of range");
    y(i, labels[i]) = 1.0;
  }
  return y;
}

}  // namespace idiff::bench
