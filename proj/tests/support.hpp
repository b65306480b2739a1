#pragma once

// Shared generators and comparison helpers for the test suite.

#include <cmath>
#include <cstdint>
#include <random>

#include "idiff/linalg/dense.hpp"
#include "idiff/linalg/lu.hpp"

namespace idiff::testing {

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : engine_(seed) {}

  double uniform(double lo = -1.0, double hi = 1.0) {
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }
  double normal() { return std::normal_distribution<double>(0.0, 1.0)(engine_); }
  std::size_t index(std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(engine_);
  }

  DenseVector vector(std::size_t n, double lo = -1.0, double hi = 1.0) {
    DenseVector v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = uniform(lo, hi);
    return v;
  }
  DenseVector gaussian(std::size_t n) {
    DenseVector v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = normal();
    return v;
  }
  DenseMatrix matrix(std::size_t r, std::size_t c) {
    DenseMatrix m(r, c);
    for (std::size_t j = 0; j < c; ++j)
      for (std::size_t i = 0; i < r; ++i) m(i, j) = normal();
    return m;
  }

  /// Random orthogonal matrix from Gram-Schmidt on a Gaussian matrix.
  DenseMatrix orthogonal(std::size_t n) {
    DenseMatrix q = matrix(n, n);
    for (std::size_t j = 0; j < n; ++j) {
      DenseVector c = q.col(j);
      for (std::size_t k = 0; k < j; ++k) {
        const DenseVector qk = q.col(k);
        c -= dot(c, qk) * qk;
      }
      q.set_col(j, (1.0 / norm(c)) * c);
    }
    return q;
  }

  /// Symmetric positive definite matrix with spectrum in [lo, hi].
  DenseMatrix spd(std::size_t n, double lo, double hi) {
    const DenseMatrix q = orthogonal(n);
    DenseVector eig = vector(n, lo, hi);
    eig[0] = lo;
    if (n > 1) eig[n - 1] = hi;
    const DenseMatrix a = q * DenseMatrix::diagonal(eig) * q.transpose();
    return 0.5 * (a + a.transpose());  // exactly symmetric
  }

  /// Nonsymmetric matrix with a dominant diagonal.
  DenseMatrix well_conditioned(std::size_t n) {
    DenseMatrix a = (1.0 / std::sqrt(static_cast<double>(n))) * matrix(n, n);
    for (std::size_t i = 0; i < n; ++i) a(i, i) += 3.0;
    return a;
  }

 private:
  std::mt19937_64 engine_;
};

inline double rel_diff(const DenseVector& a, const DenseVector& b) {
  return norm(a - b) / std::max(norm(b), 1e-300);
}
inline double rel_diff(const DenseMatrix& a, const DenseMatrix& b) {
  return frobenius_norm(a - b) / std::max(frobenius_norm(b), 1e-300);
}
inline double max_diff(const DenseVector& a, const DenseVector& b) { return norm_inf(a - b); }
inline double max_diff(const DenseMatrix& a, const DenseMatrix& b) { return max_abs(a - b); }

}  // namespace idiff::testing
