#pragma once

/// \file projections.hpp
/// \brief Euclidean and KL projections onto simple convex sets.
///
/// Every projection is a template over the scalar type, so dual-number
/// evaluation yields its Jacobian-vector products. Set parameters may be
/// plain doubles or duals (to differentiate with respect to the set).
/// Non-smooth points follow the zero-derivative convention of dual.hpp.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <utility>
#include <vector>

#include "idiff/autodiff/dual.hpp"
#include "idiff/errors.hpp"
#include "idiff/linalg/dense.hpp"
#include "idiff/linalg/lu.hpp"
#include "idiff/solvers/bisection.hpp"

namespace idiff {

/// Output coordinates above this count as in the support of a projection.
inline constexpr double kSupportTol = 1e-12;

template <class... T>
using scalar_t = std::decay_t<decltype((std::declval<T>() + ...))>;

namespace detail {

template <class S>
void note_kink_if_dual(const S& distance) {
  if constexpr (is_dual_v<S>) note_kink(value_of(distance));
}

template <class R, class S, class L, class H>
R clamp_to(const S& v, const L& lo, const H& hi) {
  note_kink_if_dual<R>(R(v) - R(lo));
  note_kink_if_dual<R>(R(v) - R(hi));
  if (value_of(v) >= value_of(hi)) return R(hi);
  if (value_of(v) <= value_of(lo)) return R(lo);
  return R(v);
}

}  // namespace detail

// ---- orthant and box ------------------------------------------------------

/// max(y, 0) elementwise.
template <class S>
BasicVector<S> proj_nonneg(const BasicVector<S>& y) {
  return map(y, [](const S& v) { return S(max(v, 0.0)); });
}

/// clip(y, lo, hi) elementwise.
template <class S, class T>
BasicVector<scalar_t<S, T>> proj_box(const BasicVector<S>& y, const BasicVector<T>& lo, const BasicVector<T>& hi) {
  detail::require_dims(y.size() == lo.size() && y.size() == hi.size(), "proj_box: bound size mismatch");
  using R = scalar_t<S, T>;
  BasicVector<R> out(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (value_of(lo[i]) > value_of(hi[i])) throw DomainError("proj_box: lower bound exceeds upper bound");
    out[i] = detail::clamp_to<R>(y[i], lo[i], hi[i]);
  }
  return out;
}

template <class S>
BasicVector<S> proj_box(const BasicVector<S>& y, double lo, double hi) {
  return proj_box(y, DenseVector(y.size(), lo), DenseVector(y.size(), hi));
}

// ---- simplex ---------------------------------------------------------------

namespace detail {

/// Indices of the simplex support and the threshold τ (at the primal value)
/// for projecting `u` onto {x ≥ 0, Σx = radius}.
inline std::pair<std::vector<std::size_t>, double> simplex_support(const DenseVector& u, double radius) {
  const std::size_t n = u.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return u[a] > u[b]; });
  double cumulative = 0.0, tau = 0.0;
  std::size_t rho = 0;
  for (std::size_t j = 0; j < n; ++j) {
    cumulative += u[order[j]];
    const double candidate = (cumulative - radius) / static_cast<double>(j + 1);
    if (u[order[j]] > candidate) {
      rho = j + 1;
      tau = candidate;
    }
  }
  order.resize(rho);
  return {std::move(order), tau};
}

}  // namespace detail

/// Euclidean projection onto {x ≥ 0, Σx = radius} by the sort-based
/// threshold rule. On the support, x = y − τ with τ recomputed in the scalar
/// type, so the dual tangent is (diag(s) − ssᵀ/‖s‖₁)·ẏ.
template <class S, class Rad = double>
BasicVector<scalar_t<S, Rad>> proj_simplex(const BasicVector<S>& y, const Rad& radius = 1.0) {
  using R = scalar_t<S, Rad>;
  if (!(value_of(radius) > 0.0)) throw DomainError("proj_simplex: radius must be positive");
  detail::require_dims(y.size() > 0, "proj_simplex: empty input");
  const auto [support, tau_value] = detail::simplex_support(values_of(y), value_of(radius));
  R acc = -R(radius);
  for (std::size_t i : support) acc += y[i];
  const R tau = acc / static_cast<double>(support.size());
  BasicVector<R> out(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) detail::note_kink_if_dual<R>(R(y[i]) - tau);
  for (std::size_t i : support) out[i] = R(y[i]) - tau;
  (void)tau_value;
  return out;
}

/// (diag(s) − ssᵀ/‖s‖₁)·v with s the support indicator of proj_simplex(y).
inline DenseVector proj_simplex_jvp(const DenseVector& y, const DenseVector& v) {
  detail::require_dims(y.size() == v.size(), "proj_simplex_jvp: size mismatch");
  const DenseVector x = proj_simplex(y);
  double count = 0.0, sv = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] > kSupportTol) {
      count += 1.0;
      sv += v[i];
    }
  }
  DenseVector out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    if (x[i] > kSupportTol) out[i] = v[i] - sv / count;
  return out;
}

/// Projects each row of a column-major m×k matrix onto the simplex.
template <class S>
BasicVector<S> proj_simplex_rows(const BasicVector<S>& y, std::size_t rows, std::size_t cols) {
  detail::require_dims(y.size() == rows * cols, "proj_simplex_rows: size mismatch");
  BasicVector<S> out(y.size());
  BasicVector<S> row(cols);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) row[j] = y[j * rows + i];
    const BasicVector<S> p = proj_simplex(row);
    for (std::size_t j = 0; j < cols; ++j) out[j * rows + i] = p[j];
  }
  return out;
}

// ---- norm balls ------------------------------------------------------------

namespace detail {
template <class Rad>
void check_radius(const Rad& radius) {
  if (!(value_of(radius) > 0.0)) throw DomainError("norm ball radius must be positive");
}
}  // namespace detail

/// ℓ1 ball of the given radius; y is returned unchanged when ‖y‖₁ ≤ radius.
template <class S, class Rad = double>
BasicVector<scalar_t<S, Rad>> proj_l1_ball(const BasicVector<S>& y, const Rad& radius) {
  using R = scalar_t<S, Rad>;
  detail::check_radius(radius);
  if (norm1(values_of(y)) <= value_of(radius)) return promote_to<R>(y);
  const BasicVector<S> magnitude = map(y, [](const S& v) { return S(abs(v)); });
  const BasicVector<R> p = proj_simplex(magnitude, radius);
  BasicVector<R> out(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) out[i] = sign(y[i]) * p[i];
  return out;
}

/// ℓ2 ball: min(1, radius/‖y‖)·y.
template <class S, class Rad = double>
BasicVector<scalar_t<S, Rad>> proj_l2_ball(const BasicVector<S>& y, const Rad& radius) {
  using R = scalar_t<S, Rad>;
  detail::check_radius(radius);
  const S n = norm(y);
  detail::note_kink_if_dual<R>(R(n) - R(radius));
  if (value_of(n) <= value_of(radius)) return promote_to<R>(y);
  return (R(radius) / R(n)) * y;
}

/// ℓ∞ ball: clip(y, −radius, radius).
template <class S, class Rad = double>
BasicVector<scalar_t<S, Rad>> proj_linf_ball(const BasicVector<S>& y, const Rad& radius) {
  using R = scalar_t<S, Rad>;
  detail::check_radius(radius);
  BasicVector<R> out(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) out[i] = detail::clamp_to<R>(y[i], -R(radius), R(radius));
  return out;
}

// ---- affine sets, hyperplanes, half-spaces ----------------------------------

/// Projection onto {x : a x = b}: y − aᵀ(aaᵀ)⁻¹(a y − b). Requires full row rank.
template <class S, class T>
BasicVector<scalar_t<S, T>> proj_affine(const BasicVector<S>& y, const DenseMatrix& a, const BasicVector<T>& b) {
  detail::require_dims(a.cols() == y.size() && a.rows() == b.size(), "proj_affine: size mismatch");
  const LuFactorization gram(a * a.transpose());
  const auto residual = a * y - b;
  return y - transpose_mul(a, gram.solve(residual));
}

/// Projection onto {x : aᵀx = b}.
template <class S, class A, class B>
BasicVector<scalar_t<S, A, B>> proj_hyperplane(const BasicVector<S>& y, const BasicVector<A>& a, const B& b) {
  detail::require_dims(a.size() == y.size(), "proj_hyperplane: size mismatch");
  using R = scalar_t<S, A, B>;
  const R aa = R(dot(a, a));
  if (value_of(aa) == 0.0) throw DomainError("proj_hyperplane: normal vector is zero");
  const R step = (R(dot(a, y)) - R(b)) / aa;
  return y - step * a;
}

/// Projection onto {x : aᵀx ≤ b}.
template <class S, class A, class B>
BasicVector<scalar_t<S, A, B>> proj_halfspace(const BasicVector<S>& y, const BasicVector<A>& a, const B& b) {
  detail::require_dims(a.size() == y.size(), "proj_halfspace: size mismatch");
  using R = scalar_t<S, A, B>;
  const R aa = R(dot(a, a));
  if (value_of(aa) == 0.0) throw DomainError("proj_halfspace: normal vector is zero");
  const R violation = R(dot(a, y)) - R(b);
  detail::note_kink_if_dual<R>(violation);
  if (value_of(violation) <= 0.0) return promote_to<R>(y);
  return y - (violation / aa) * a;
}

// ---- box sections ----------------------------------------------------------

/// Projection onto {z : lo ≤ z ≤ hi, wᵀz = c}.
///
/// The optimal z is L(x) = clip(w·x + y, lo, hi) for the scalar dual variable
/// x solving wᵀL(x) = c, found by bisection to 1e-12 and polished on its
/// linear piece. For dual scalars, x is corrected by one implicit step
/// x − g(x)/g′(x), which carries ∇x = Bᵀ/A into the tangent; z then follows
/// by the chain rule through the clip.
template <class S, class T>
BasicVector<scalar_t<S, T>> proj_box_section(const BasicVector<S>& y, const BasicVector<T>& lo,
                                             const BasicVector<T>& hi, const BasicVector<T>& w, const T& c) {
  using R = scalar_t<S, T>;
  const std::size_t n = y.size();
  detail::require_dims(lo.size() == n && hi.size() == n && w.size() == n, "proj_box_section: size mismatch");
  const DenseVector yv = values_of(y), lv = values_of(lo), hv = values_of(hi), wv = values_of(w);
  const double cv = value_of(c);
  for (std::size_t i = 0; i < n; ++i)
    if (lv[i] > hv[i]) throw DomainError("proj_box_section: lower bound exceeds upper bound");

  auto z_at = [&](double x, std::size_t i) { return std::clamp(wv[i] * x + yv[i], lv[i], hv[i]); };
  auto g = [&](double x) {
    double acc = -cv;
    for (std::size_t i = 0; i < n; ++i) acc += wv[i] * z_at(x, i);
    return acc;
  };

  // Every coordinate is clipped outside the outermost breakpoints.
  double bp_lo = 0.0, bp_hi = 0.0;
  bool any = false;
  for (std::size_t i = 0; i < n; ++i) {
    if (wv[i] == 0.0) continue;
    for (double bound : {lv[i], hv[i]}) {
      const double bp = (bound - yv[i]) / wv[i];
      bp_lo = any ? std::min(bp_lo, bp) : bp;
      bp_hi = any ? std::max(bp_hi, bp) : bp;
      any = true;
    }
  }
  const double width = std::max(1.0, bp_hi - bp_lo);
  const double x_lo = bp_lo - width, x_hi = bp_hi + width;
  const double g_lo = g(x_lo), g_hi = g(x_hi);
  const double feas_tol = 1e-12 * std::max(1.0, std::fabs(cv));
  if (g_lo > feas_tol || g_hi < -feas_tol) throw DomainError("proj_box_section: the set is empty");

  double x = 0.0;
  if (std::fabs(g_lo) <= feas_tol) x = x_lo;
  else if (std::fabs(g_hi) <= feas_tol) x = x_hi;
  else x = bisection_root(g, x_lo, x_hi, 1e-12, 200);

  // Polish on the linear piece that contains x.
  double slope = 0.0, offset = -cv;
  std::vector<bool> free(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = wv[i] * x + yv[i];
    free[i] = t > lv[i] && t < hv[i];
    if (free[i]) {
      slope += wv[i] * wv[i];
      offset += wv[i] * yv[i];
    } else {
      offset += wv[i] * z_at(x, i);
    }
  }
  if (slope > 0.0) {
    const double polished = -offset / slope;
    bool same_piece = true;
    for (std::size_t i = 0; i < n && same_piece; ++i) {
      const double t = wv[i] * polished + yv[i];
      same_piece = (t > lv[i] && t < hv[i]) == free[i];
    }
    if (same_piece) x = polished;
  }

  R x_s = R(x);
  if constexpr (is_dual_v<R>) {
    if (slope > 0.0) {
      R residual = -R(c);
      for (std::size_t i = 0; i < n; ++i) residual += R(w[i]) * detail::clamp_to<R>(R(w[i]) * x + R(y[i]), lo[i], hi[i]);
      x_s = R(x) - (residual - R(value_of(residual))) / slope;
    }
  }
  BasicVector<R> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = detail::clamp_to<R>(R(w[i]) * x_s + R(y[i]), lo[i], hi[i]);
  return out;
}

// ---- KL projections --------------------------------------------------------

/// KL projection onto the simplex: softmax(y), computed with a max-shift.
template <class S>
BasicVector<S> kl_proj_simplex(const BasicVector<S>& y) {
  detail::require_dims(y.size() > 0, "kl_proj_simplex: empty input");
  double shift = -std::numeric_limits<double>::infinity();
  for (const auto& v : y) shift = std::max(shift, value_of(v));
  if (!std::isfinite(shift)) throw DomainError("kl_proj_simplex: no finite entry");
  BasicVector<S> e = map(y, [shift](const S& v) { return S(exp(v - shift)); });
  const S total = sum(e);
  for (auto& v : e) v = v / total;
  return e;
}

/// Row-wise softmax of a column-major m×k matrix.
template <class S>
BasicVector<S> kl_proj_simplex_rows(const BasicVector<S>& y, std::size_t rows, std::size_t cols) {
  detail::require_dims(y.size() == rows * cols, "kl_proj_simplex_rows: size mismatch");
  BasicVector<S> out(y.size());
  BasicVector<S> row(cols);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) row[j] = y[j * rows + i];
    const BasicVector<S> p = kl_proj_simplex(row);
    for (std::size_t j = 0; j < cols; ++j) out[j * rows + i] = p[j];
  }
  return out;
}

}  // namespace idiff
