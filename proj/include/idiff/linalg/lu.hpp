#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "idiff/errors.hpp"
#include "idiff/linalg/dense.hpp"

namespace idiff {

/// Partial-pivot LU factorization of a square dense matrix.
///
/// A pivot whose magnitude falls below 1e-12 times the largest entry of the
/// input raises SingularMatrixError.
class LuFactorization {
 public:
  static constexpr double kSingularRelTol = 1e-12;

  explicit LuFactorization(DenseMatrix a) : lu_(std::move(a)), perm_(lu_.rows()) {
    const std::size_t n = lu_.rows();
    detail::require_dims(n == lu_.cols(), "LU requires a square matrix");
    const double scale = max_abs(lu_);
    const double threshold = kSingularRelTol * (scale > 0.0 ? scale : 1.0);
    for (std::size_t i = 0; i < n; ++i) perm_[i] = i;

    for (std::size_t k = 0; k < n; ++k) {
      std::size_t p = k;
      double best = std::fabs(lu_(k, k));
      for (std::size_t i = k + 1; i < n; ++i) {
        if (std::fabs(lu_(i, k)) > best) {
          best = std::fabs(lu_(i, k));
          p = i;
        }
      }
      if (best <= threshold || scale == 0.0) {
        throw SingularMatrixError("singular matrix: pivot " + std::to_string(best) +
                                  " at column " + std::to_string(k));
      }
      if (p != k) {
        for (std::size_t j = 0; j < n; ++j) std::swap(lu_(k, j), lu_(p, j));
        std::swap(perm_[k], perm_[p]);
      }
      const double pivot = lu_(k, k);
      for (std::size_t i = k + 1; i < n; ++i) {
        lu_(i, k) /= pivot;
        const double lik = lu_(i, k);
        if (lik == 0.0) continue;
        for (std::size_t j = k + 1; j < n; ++j) lu_(i, j) -= lik * lu_(k, j);
      }
    }
  }

  [[nodiscard]] std::size_t dim() const { return lu_.rows(); }

  /// Solves a x = b; b may hold dual numbers since the solve is linear in b.
  template <class S>
  [[nodiscard]] BasicVector<S> solve(const BasicVector<S>& b) const {
    const std::size_t n = dim();
    detail::require_dims(b.size() == n, "LU solve rhs size mismatch");
    BasicVector<S> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = b[perm_[i]];
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < i; ++j) x[i] -= lu_(i, j) * x[j];
    for (std::size_t ii = n; ii-- > 0;) {
      for (std::size_t j = ii + 1; j < n; ++j) x[ii] -= lu_(ii, j) * x[j];
      x[ii] /= lu_(ii, ii);
    }
    return x;
  }

  /// Solves aᵀx = b with the same factors.
  [[nodiscard]] DenseVector solve_transpose(const DenseVector& b) const {
    const std::size_t n = dim();
    detail::require_dims(b.size() == n, "LU solve rhs size mismatch");
    DenseVector y = b;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < i; ++j) y[i] -= lu_(j, i) * y[j];
      y[i] /= lu_(i, i);
    }
    for (std::size_t ii = n; ii-- > 0;)
      for (std::size_t j = ii + 1; j < n; ++j) y[ii] -= lu_(j, ii) * y[j];
    DenseVector x(n);
    for (std::size_t i = 0; i < n; ++i) x[perm_[i]] = y[i];
    return x;
  }

  [[nodiscard]] DenseMatrix solve(const DenseMatrix& b) const {
    detail::require_dims(b.rows() == dim(), "LU solve rhs rows mismatch");
    DenseMatrix x(b.rows(), b.cols());
    for (std::size_t j = 0; j < b.cols(); ++j) x.set_col(j, solve(b.col(j)));
    return x;
  }

 private:
  DenseMatrix lu_;
  std::vector<std::size_t> perm_;
};

/// Direct solve of aX = b.
inline DenseMatrix dense_solve(const DenseMatrix& a, const DenseMatrix& b) {
  return LuFactorization(a).solve(b);
}

inline DenseVector dense_solve(const DenseMatrix& a, const DenseVector& b) {
  return LuFactorization(a).solve(b);
}

/// Smallest eigenvalue of a symmetric positive definite matrix by inverse
/// power iteration. Returns the Rayleigh quotient at the final iterate.
inline double min_eigenvalue_spd(const DenseMatrix& a, double tol = 1e-10,
                                 std::size_t max_iter = 0) {
  const std::size_t n = a.rows();
  detail::require_dims(n == a.cols() && n > 0, "min_eigenvalue_spd requires a square matrix");
  if (max_iter == 0) max_iter = 10 * n;
  const LuFactorization lu(a);
  DenseVector v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = 1.0 + 0.1 * static_cast<double>(i % 7);
  v *= 1.0 / norm(v);
  double lambda = dot(v, a * v);
  for (std::size_t it = 0; it < max_iter; ++it) {
    DenseVector w = lu.solve(v);
    w *= 1.0 / norm(w);
    const double next = dot(w, a * w);
    const bool done = std::fabs(next - lambda) <= tol * std::fabs(next);
    v = std::move(w);
    lambda = next;
    if (done) return lambda;
  }
  // The Rayleigh quotient is accurate to second order in the eigenvector error.
  DenseVector r = a * v - lambda * v;
  if (norm(r) > std::sqrt(tol) * std::fabs(lambda) + 1e-14) {
    throw NumericalError("inverse power iteration did not converge");
  }
  return lambda;
}

/// Largest eigenvalue of a symmetric positive semidefinite matrix by power
/// iteration, stopped when the Rayleigh quotient changes by less than tol
/// relative. The quotient approaches λ_max from below.
inline double max_eigenvalue_psd(const DenseMatrix& a, double tol = 1e-12, std::size_t max_iter = 0) {
  const std::size_t n = a.rows();
  detail::require_dims(n == a.cols() && n > 0, "max_eigenvalue_psd requires a square matrix");
  if (max_iter == 0) max_iter = 100 * n;
  DenseVector v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = 1.0 + 0.1 * static_cast<double>(i % 7);
  v *= 1.0 / norm(v);
  double lambda = dot(v, a * v);
  for (std::size_t it = 0; it < max_iter; ++it) {
    DenseVector w = a * v;
    const double len = norm(w);
    if (len == 0.0) return 0.0;
    w *= 1.0 / len;
    const double next = dot(w, a * w);
    const bool done = std::fabs(next - lambda) <= tol * std::fabs(next);
    v = std::move(w);
    lambda = next;
    if (done) break;
  }
  return lambda;
}

/// All eigenvalues of a symmetric matrix, ascending, by cyclic Jacobi
/// rotations. Sweeps stop once the off-diagonal Frobenius norm falls below
/// 1e-15 times the total norm.
inline std::vector<double> symmetric_eigenvalues(DenseMatrix a, std::size_t max_sweeps = 100) {
  const std::size_t n = a.rows();
  detail::require_dims(n == a.cols() && n > 0, "symmetric_eigenvalues requires a square matrix");
  const double total = frobenius_norm(a);
  for (std::size_t sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += 2.0 * a(p, q) * a(p, q);
    if (std::sqrt(off) <= 1e-15 * total) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double tau = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::fabs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t), s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
      }
    }
  }
  std::vector<double> eig(n);
  for (std::size_t i = 0; i < n; ++i) eig[i] = a(i, i);
  std::sort(eig.begin(), eig.end());
  return eig;
}

}  // namespace idiff
