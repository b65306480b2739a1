#pragma once

/// \file krylov.hpp
/// \brief Matrix-free Krylov solvers: CG, restarted GMRES, BiCGSTAB, and CG on
/// the normal equations.
///
/// Every solver starts from x = 0, never throws on non-convergence, and reports
/// the scaled residual ‖op(x) − rhs‖ / max(1, ‖rhs‖) recomputed from scratch at
/// exit, so `converged` implies `final_residual_norm <= tol`.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

#include "idiff/linalg/dense.hpp"
#include "idiff/linalg/linear_map.hpp"

namespace idiff {

struct SolveReport {
  std::size_t iterations = 0;
  double final_residual_norm = 0.0;
  bool converged = false;
  bool used_least_squares_fallback = false;
};

inline constexpr double kDefaultKrylovTol = 1e-10;

template <class Vec>
struct SolveResult {
  Vec x;
  SolveReport report;
};

namespace detail {

inline std::size_t default_max_iter(std::size_t max_iter, std::size_t dim) {
  return max_iter == 0 ? 10 * dim : max_iter;
}

inline double residual_scale(const DenseVector& rhs) { return std::max(1.0, norm(rhs)); }

inline double scaled_residual(const LinearMap& op, const DenseVector& x, const DenseVector& rhs) {
  return norm(rhs - op.apply(x)) / residual_scale(rhs);
}

inline SolveResult<DenseVector> finish(const LinearMap& op, DenseVector x, const DenseVector& rhs,
                                       double tol, std::size_t iterations) {
  SolveReport rep;
  rep.iterations = iterations;
  rep.final_residual_norm = scaled_residual(op, x, rhs);
  rep.converged = rep.final_residual_norm <= tol;
  return {std::move(x), rep};
}

}  // namespace detail

/// Conjugate gradient for symmetric positive (semi-)definite operators.
///
/// A direction of non-positive curvature stops the iteration with
/// converged = false; callers fall back to normal_cg_solve.
inline SolveResult<DenseVector> cg_solve(const LinearMap& op, const DenseVector& rhs,
                                         double tol = kDefaultKrylovTol, std::size_t max_iter = 0) {
  detail::require_dims(op.square() && op.dim_in() == rhs.size(), "cg_solve: op/rhs mismatch");
  max_iter = detail::default_max_iter(max_iter, rhs.size());
  const double scale = detail::residual_scale(rhs);

  DenseVector x(rhs.size());
  DenseVector r = rhs;
  DenseVector p = r;
  double rr = dot(r, r);
  std::size_t it = 0;
  while (it < max_iter) {
    if (std::sqrt(rr) / scale <= tol) {
      // Confirm against the true residual; restart the recurrence if it drifted.
      r = rhs - op.apply(x);
      rr = dot(r, r);
      if (std::sqrt(rr) / scale <= tol) break;
      p = r;
    }
    const DenseVector ap = op.apply(p);
    const double curvature = dot(p, ap);
    ++it;
    if (!(curvature > 0.0)) break;
    const double alpha = rr / curvature;
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * ap[i];
    }
    const double rr_next = dot(r, r);
    const double beta = rr_next / rr;
    rr = rr_next;
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = r[i] + beta * p[i];
  }
  return detail::finish(op, std::move(x), rhs, tol, it);
}

/// Restarted GMRES(restart) with modified Gram-Schmidt and Givens rotations.
inline SolveResult<DenseVector> gmres_solve(const LinearMap& op, const DenseVector& rhs,
                                            double tol = kDefaultKrylovTol, std::size_t max_iter = 0,
                                            std::size_t restart = 0) {
  const std::size_t n = rhs.size();
  detail::require_dims(op.square() && op.dim_in() == n, "gmres_solve: op/rhs mismatch");
  max_iter = detail::default_max_iter(max_iter, n);
  if (restart == 0) restart = std::min<std::size_t>(30, n);
  const double scale = detail::residual_scale(rhs);

  DenseVector x(n);
  std::size_t it = 0;
  double previous_cycle_residual = std::numeric_limits<double>::infinity();
  while (it < max_iter) {
    DenseVector r = rhs - op.apply(x);
    const double beta = norm(r);
    if (beta / scale <= tol) break;
    // Stagnation: a full cycle that does not reduce the residual.
    if (beta >= previous_cycle_residual * (1.0 - 1e-14)) break;
    previous_cycle_residual = beta;

    const std::size_t m = restart;
    std::vector<DenseVector> basis;
    basis.reserve(m + 1);
    basis.push_back((1.0 / beta) * r);
    std::vector<std::vector<double>> h(m + 1, std::vector<double>(m, 0.0));
    std::vector<double> cs(m, 0.0), sn(m, 0.0), g(m + 1, 0.0);
    g[0] = beta;

    std::size_t k = 0;
    for (; k < m && it < max_iter; ++k) {
      ++it;
      DenseVector w = op.apply(basis[k]);
      for (std::size_t i = 0; i <= k; ++i) {
        h[i][k] = dot(w, basis[i]);
        for (std::size_t l = 0; l < n; ++l) w[l] -= h[i][k] * basis[i][l];
      }
      const double hnext = norm(w);
      h[k + 1][k] = hnext;
      for (std::size_t i = 0; i < k; ++i) {
        const double t = cs[i] * h[i][k] + sn[i] * h[i + 1][k];
        h[i + 1][k] = -sn[i] * h[i][k] + cs[i] * h[i + 1][k];
        h[i][k] = t;
      }
      const double denom = std::hypot(h[k][k], h[k + 1][k]);
      if (denom == 0.0) break;
      cs[k] = h[k][k] / denom;
      sn[k] = h[k + 1][k] / denom;
      h[k][k] = denom;
      h[k + 1][k] = 0.0;
      g[k + 1] = -sn[k] * g[k];
      g[k] = cs[k] * g[k];
      const bool small = std::fabs(g[k + 1]) / scale <= tol;
      if (hnext == 0.0 || small) {
        ++k;
        break;
      }
      basis.push_back((1.0 / hnext) * w);
    }
    // Back substitution for the least-squares coefficients.
    std::vector<double> y(k, 0.0);
    for (std::size_t ii = k; ii-- > 0;) {
      double s = g[ii];
      for (std::size_t j = ii + 1; j < k; ++j) s -= h[ii][j] * y[j];
      y[ii] = h[ii][ii] != 0.0 ? s / h[ii][ii] : 0.0;
    }
    for (std::size_t j = 0; j < k; ++j)
      for (std::size_t l = 0; l < n; ++l) x[l] += y[j] * basis[j][l];
  }
  return detail::finish(op, std::move(x), rhs, tol, it);
}

/// BiCGSTAB with the limited-ω stabilization step. On breakdown (ρ = 0,
/// r̂ᵀv = 0, or ω = 0) the recurrence restarts from the current iterate with a
/// new shadow residual: first r, then r + op(r), then pseudo-random vectors.
/// Running out of iterations mid-breakdown ends with converged = false.
inline SolveResult<DenseVector> bicgstab_solve(const LinearMap& op, const DenseVector& rhs,
                                               double tol = kDefaultKrylovTol,
                                               std::size_t max_iter = 0) {
  const std::size_t n = rhs.size();
  detail::require_dims(op.square() && op.dim_in() == n, "bicgstab_solve: op/rhs mismatch");
  max_iter = detail::default_max_iter(max_iter, n);
  const double scale = detail::residual_scale(rhs);

  DenseVector x(n);
  DenseVector r = rhs;
  std::uint64_t lcg = 0x9E3779B97F4A7C15ULL;
  std::size_t it = 0;
  for (int cycle = 0; it < max_iter; ++cycle) {
    if (cycle > 0) r = rhs - op.apply(x);
    const double res = norm(r) / scale;
    if (!std::isfinite(res) || res <= tol) break;
    DenseVector r_hat = r;
    if (cycle == 1) r_hat += op.apply(r);
    if (cycle >= 2) {
      for (std::size_t i = 0; i < n; ++i) {
        lcg = lcg * 6364136223846793005ULL + 1442695040888963407ULL;
        r_hat[i] = static_cast<double>(lcg >> 11) * 0x1.0p-53 - 0.5;
      }
    }
    DenseVector p(n), v(n);
    double rho = 1.0, alpha = 1.0, omega = 1.0;
    bool restart = false;
    while (it < max_iter && norm(r) / scale > tol) {
      ++it;
      const double rho_next = dot(r_hat, r);
      if (rho_next == 0.0) {
        restart = true;
        break;
      }
      const double beta = (rho_next / rho) * (alpha / omega);
      rho = rho_next;
      for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * (p[i] - omega * v[i]);
      v = op.apply(p);
      const double denom = dot(r_hat, v);
      if (denom == 0.0) {
        restart = true;
        break;
      }
      alpha = rho / denom;
      for (std::size_t i = 0; i < n; ++i) x[i] += alpha * p[i];
      DenseVector s = r - alpha * v;
      if (norm(s) / scale <= tol) {
        r = std::move(s);
        break;
      }
      const DenseVector t = op.apply(s);
      const double tt = dot(t, t);
      // Limited-ω rule: keep |cos∠(t, s)| ≥ 0.7 so ω cannot collapse to 0
      // when op is nearly skew.
      const double ts = dot(t, s);
      const double cosine = tt > 0.0 ? ts / (std::sqrt(tt) * norm(s)) : 0.0;
      omega = tt > 0.0 ? ts / tt : 0.0;
      if (tt > 0.0 && std::fabs(cosine) < 0.7) {
        omega = (ts < 0.0 ? -0.7 : 0.7) * norm(s) / std::sqrt(tt);
      }
      if (omega == 0.0) {
        r = std::move(s);
        restart = true;
        break;
      }
      for (std::size_t i = 0; i < n; ++i) {
        x[i] += omega * s[i];
        r[i] = s[i] - omega * t[i];
      }
    }
    // Without a breakdown, re-check against the true residual to catch drift.
    if (!restart && detail::scaled_residual(op, x, rhs) <= tol) break;
  }
  return detail::finish(op, std::move(x), rhs, tol, it);
}

/// CG on opᵀop x = opᵀrhs (CGNR). From x = 0 this converges to the
/// minimum-norm least-squares solution.
///
/// The reported residual is that of the normal equations,
/// ‖opᵀ(rhs − op x)‖ / max(1, ‖opᵀrhs‖), since op x = rhs may be unsolvable.
inline SolveResult<DenseVector> normal_cg_solve(const LinearMap& op, const DenseVector& rhs,
                                                double tol = kDefaultKrylovTol,
                                                std::size_t max_iter = 0) {
  detail::require_dims(op.dim_out() == rhs.size(), "normal_cg_solve: op/rhs mismatch");
  const std::size_t n = op.dim_in();
  max_iter = detail::default_max_iter(max_iter, n);
  const DenseVector atb = op.apply_transpose(rhs);
  const double scale = detail::residual_scale(atb);

  DenseVector x(n);
  DenseVector s = atb;  // normal-equation residual
  DenseVector p = s;
  double ss = dot(s, s);
  std::size_t it = 0;
  while (it < max_iter && std::sqrt(ss) / scale > tol) {
    const DenseVector q = op.apply(p);
    const double qq = dot(q, q);
    ++it;
    if (!(qq > 0.0)) break;
    const double alpha = ss / qq;
    for (std::size_t i = 0; i < n; ++i) x[i] += alpha * p[i];
    // Recompute from scratch every so often to keep the recurrence honest.
    if (it % 50 == 0) {
      s = op.apply_transpose(rhs - op.apply(x));
    } else {
      s -= alpha * op.apply_transpose(q);
    }
    const double ss_next = dot(s, s);
    const double beta = ss_next / ss;
    ss = ss_next;
    for (std::size_t i = 0; i < n; ++i) p[i] = s[i] + beta * p[i];
  }
  SolveReport rep;
  rep.iterations = it;
  rep.final_residual_norm = norm(op.apply_transpose(rhs - op.apply(x))) / scale;
  rep.converged = rep.final_residual_norm <= tol;
  return {std::move(x), rep};
}

}  // namespace idiff
