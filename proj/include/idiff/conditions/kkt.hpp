#pragma once

/// \file kkt.hpp
/// \brief KKT conditions of constrained problems and the dense QP instance.
///
/// The root vector packs primal and dual variables in the order
/// (primal z, equality multipliers ν, inequality multipliers λ). The order is
/// part of the interface.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "idiff/autodiff/diff_fn.hpp"
#include "idiff/errors.hpp"
#include "idiff/implicit/problem.hpp"
#include "idiff/linalg/dense.hpp"
#include "idiff/linalg/lu.hpp"

namespace idiff {

struct KktPoint {
  DenseVector primal;
  DenseVector eq_dual;
  DenseVector ineq_dual;

  [[nodiscard]] DenseVector pack() const { return concat({&primal, &eq_dual, &ineq_dual}); }

  static KktPoint unpack(const DenseVector& packed, std::size_t p, std::size_t q, std::size_t r) {
    detail::require_dims(packed.size() == p + q + r, "KktPoint::unpack: length != p + q + r");
    return {packed.segment(0, p), packed.segment(p, q), packed.segment(p + q, r)};
  }
};

/// Constraints G(z, θ) ≤ 0 and H(z, θ) = 0. A default-constructed map
/// (dim_out = 0) means the constraint family is absent.
struct ConstraintFns {
  DiffFn2 ineq;
  DiffFn2 eq;

  [[nodiscard]] std::size_t ineq_rows() const { return ineq.dim_out; }
  [[nodiscard]] std::size_t eq_rows() const { return eq.dim_out; }
};

namespace detail {

/// wᵀ∂₁G(z, θ) from dim_z forward passes at level Dual<S>.
template <class S>
BasicVector<S> constraint_vjp(const DiffFn2& g, const BasicVector<S>& z, const BasicVector<S>& theta,
                              const BasicVector<S>& w) {
  BasicVector<S> out(z.size());
  const auto th = seed(theta);
  for (std::size_t i = 0; i < z.size(); ++i) {
    const auto col = g.eval<Dual<S>>(seed(z, nullptr, i), th);
    S acc(0.0);
    for (std::size_t k = 0; k < w.size(); ++k) acc += w[k] * col[k].eps;
    out[i] = acc;
  }
  return out;
}

template <class S>
BasicVector<S> kkt_residual(const ScalarFn2& f, const ConstraintFns& cons, const BasicVector<S>& packed,
                            const BasicVector<S>& theta) {
  const std::size_t p = f.dim_x, q = cons.eq_rows(), r = cons.ineq_rows();
  const BasicVector<S> z = packed.segment(0, p);
  const BasicVector<S> nu = packed.segment(p, q);
  const BasicVector<S> lam = packed.segment(p + q, r);
  BasicVector<S> stat = gradient_at(f, z, theta);
  BasicVector<S> out(p + q + r);
  if (q > 0) {
    stat = stat + constraint_vjp(cons.eq, z, theta, nu);
    out.set_segment(p, cons.eq.eval<S>(z, theta));
  }
  if (r > 0) {
    stat = stat + constraint_vjp(cons.ineq, z, theta, lam);
    out.set_segment(p + q, cwise_mul(lam, cons.ineq.eval<S>(z, theta)));
  }
  out.set_segment(0, stat);
  return out;
}

}  // namespace detail

/// F(z, ν, λ, θ) = (∇₁f + [∂₁G]ᵀλ + [∂₁H]ᵀν, H, λ∘G).
///
/// The constraint Jacobians are never formed: each transpose product is a
/// set of dual passes. The map has no second-order evaluation.
inline RootProblem kkt_condition(const ScalarFn2& f, const ConstraintFns& cons) {
  const std::size_t p = f.dim_x, n = f.dim_theta;
  for (const DiffFn2* g : {&cons.ineq, &cons.eq}) {
    if (g->dim_out == 0) continue;
    detail::require_dims(g->dim_x == p && g->dim_theta == n,
                         "kkt_condition: constraint arguments must match the objective");
  }
  const std::size_t d = p + cons.eq_rows() + cons.ineq_rows();
  DiffFn2 map;
  map.dim_x = map.dim_out = d;
  map.dim_theta = n;
  map.eval0 = [f, cons](const DenseVector& x, const DenseVector& th) { return detail::kkt_residual(f, cons, x, th); };
  map.eval1 = [f, cons](const BasicVector<Dual1>& x, const BasicVector<Dual1>& th) {
    return detail::kkt_residual(f, cons, x, th);
  };
  return RootProblem(std::move(map));
}

// ---------------------------------------------------------------------------
// Quadratic programs

/// min ½zᵀQz + cᵀz  s.t.  Ez = d,  Mz ≤ h.
struct QpData {
  DenseMatrix quad;      // Q, p×p symmetric PSD
  DenseVector lin;       // c
  DenseMatrix eq_mat;    // E, q×p
  DenseVector eq_rhs;    // d
  DenseMatrix ineq_mat;  // M, r×p
  DenseVector ineq_rhs;  // h

  [[nodiscard]] std::size_t primal_dim() const { return quad.rows(); }
  [[nodiscard]] std::size_t eq_rows() const { return eq_rhs.size(); }
  [[nodiscard]] std::size_t ineq_rows() const { return ineq_rhs.size(); }
};

/// Offsets of the QP data inside θ = (vec Q, vec E, vec M, c, d, h), each
/// matrix flattened column-major.
struct QpLayout {
  std::size_t p = 0, q = 0, r = 0;

  [[nodiscard]] std::size_t quad_at() const { return 0; }
  [[nodiscard]] std::size_t eq_mat_at() const { return p * p; }
  [[nodiscard]] std::size_t ineq_mat_at() const { return eq_mat_at() + q * p; }
  [[nodiscard]] std::size_t lin_at() const { return ineq_mat_at() + r * p; }
  [[nodiscard]] std::size_t eq_rhs_at() const { return lin_at() + p; }
  [[nodiscard]] std::size_t ineq_rhs_at() const { return eq_rhs_at() + q; }
  [[nodiscard]] std::size_t size() const { return ineq_rhs_at() + r; }
};

namespace detail {

inline void check_qp(const QpData& qp) {
  const std::size_t p = qp.primal_dim();
  require_dims(p > 0 && qp.quad.cols() == p && qp.lin.size() == p, "QpData: Q must be p×p and c of length p");
  require_dims(qp.eq_mat.rows() == qp.eq_rows() && (qp.eq_rows() == 0 || qp.eq_mat.cols() == p),
               "QpData: E must be q×p with d of length q");
  require_dims(qp.ineq_mat.rows() == qp.ineq_rows() && (qp.ineq_rows() == 0 || qp.ineq_mat.cols() == p),
               "QpData: M must be r×p with h of length r");
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = 0; j < i; ++j)
      if (qp.quad(i, j) != qp.quad(j, i)) throw DomainError("QpData: Q is not symmetric");
  if (symmetric_eigenvalues(qp.quad).front() < -1e-9) throw DomainError("QpData: Q is not positive semidefinite");
}

template <class S>
BasicMatrix<S> matrix_block(const BasicVector<S>& theta, std::size_t at, std::size_t rows, std::size_t cols) {
  return BasicMatrix<S>::reshape(theta.segment(at, rows * cols), rows, cols);
}

}  // namespace detail

inline QpLayout qp_layout(const QpData& qp) { return {qp.primal_dim(), qp.eq_rows(), qp.ineq_rows()}; }

/// θ = (vec Q, vec E, vec M, c, d, h).
inline DenseVector qp_theta(const QpData& qp) {
  const DenseVector vq = qp.quad.flatten(), ve = qp.eq_mat.flatten(), vm = qp.ineq_mat.flatten();
  return concat({&vq, &ve, &vm, &qp.lin, &qp.eq_rhs, &qp.ineq_rhs});
}

/// kkt_condition for the QP with every data entry exposed through θ. The
/// stationarity row is Qz + c + Eᵀν + Mᵀλ, taking Q as given.
inline RootProblem qp_kkt(const QpData& qp) {
  detail::check_qp(qp);
  const QpLayout lay = qp_layout(qp);
  const std::size_t p = lay.p, n = lay.size();
  auto value = [lay](const auto& z, const auto& th) {
    const auto quad = detail::matrix_block(th, lay.quad_at(), lay.p, lay.p);
    return 0.5 * dot(z, quad * z) + dot(th.segment(lay.lin_at(), lay.p), z);
  };
  auto grad = [lay](const auto& z, const auto& th) {
    return detail::matrix_block(th, lay.quad_at(), lay.p, lay.p) * z + th.segment(lay.lin_at(), lay.p);
  };
  ConstraintFns cons;
  if (lay.q > 0) {
    cons.eq = make_diff_fn(p, n, lay.q, [lay](const auto& z, const auto& th) {
      return detail::matrix_block(th, lay.eq_mat_at(), lay.q, lay.p) * z - th.segment(lay.eq_rhs_at(), lay.q);
    });
  }
  if (lay.r > 0) {
    cons.ineq = make_diff_fn(p, n, lay.r, [lay](const auto& z, const auto& th) {
      return detail::matrix_block(th, lay.ineq_mat_at(), lay.r, lay.p) * z - th.segment(lay.ineq_rhs_at(), lay.r);
    });
  }
  return kkt_condition(make_scalar_fn(p, n, value, grad), cons);
}

namespace detail {

struct SaddleSolution {
  DenseVector primal;
  DenseVector mult;  // equality rows first, then the listed inequality rows
};

/// Solves [[Q, Cᵀ], [C, 0]] (z, μ) = (−c, rhs) with C = (E; M_active).
inline SaddleSolution qp_saddle(const QpData& qp, const std::vector<std::size_t>& active) {
  const std::size_t p = qp.primal_dim(), q = qp.eq_rows(), k = q + active.size();
  DenseMatrix kkt(p + k, p + k);
  DenseVector rhs(p + k);
  for (std::size_t i = 0; i < p; ++i) {
    rhs[i] = -qp.lin[i];
    for (std::size_t j = 0; j < p; ++j) kkt(i, j) = qp.quad(i, j);
  }
  auto put_row = [&](std::size_t row, const DenseVector& a, double b) {
    for (std::size_t j = 0; j < p; ++j) kkt(p + row, j) = kkt(j, p + row) = a[j];
    rhs[p + row] = b;
  };
  for (std::size_t i = 0; i < q; ++i) put_row(i, qp.eq_mat.row(i), qp.eq_rhs[i]);
  for (std::size_t i = 0; i < active.size(); ++i) put_row(q + i, qp.ineq_mat.row(active[i]), qp.ineq_rhs[active[i]]);
  const DenseVector sol = LuFactorization(std::move(kkt)).solve(rhs);
  return {sol.segment(0, p), sol.segment(p, k)};
}

/// Active-set guess from projected gradient ascent on the dual over λ ≥ 0.
/// Needs the equality-only saddle matrix to be invertible; otherwise empty.
inline std::vector<std::size_t> qp_dual_warm_start(const QpData& qp) {
  const std::size_t p = qp.primal_dim(), q = qp.eq_rows(), r = qp.ineq_rows();
  DenseMatrix kkt(p + q, p + q);
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = 0; j < p; ++j) kkt(i, j) = qp.quad(i, j);
  for (std::size_t i = 0; i < q; ++i)
    for (std::size_t j = 0; j < p; ++j) kkt(p + i, j) = kkt(j, p + i) = qp.eq_mat(i, j);
  std::vector<std::size_t> active;
  try {
    const LuFactorization lu(kkt);
    DenseVector rhs(p + q);
    for (std::size_t i = 0; i < p; ++i) rhs[i] = -qp.lin[i];
    for (std::size_t i = 0; i < q; ++i) rhs[p + i] = qp.eq_rhs[i];
    const DenseVector z0 = lu.solve(rhs).segment(0, p);
    // z(λ) = z0 − Zλ; the dual ascent direction is M z(λ) − h = g0 − Hλ.
    DenseMatrix zmat(p, r);
    for (std::size_t k = 0; k < r; ++k) {
      DenseVector e(p + q);
      for (std::size_t j = 0; j < p; ++j) e[j] = qp.ineq_mat(k, j);
      zmat.set_col(k, lu.solve(e).segment(0, p));
    }
    const DenseMatrix hess = qp.ineq_mat * zmat;
    const DenseVector g0 = qp.ineq_mat * z0 - qp.ineq_rhs;
    double lip = 0.0;
    for (std::size_t i = 0; i < r; ++i) {
      double row = 0.0;
      for (std::size_t j = 0; j < r; ++j) row += std::fabs(hess(i, j));
      lip = std::max(lip, row);
    }
    if (lip == 0.0) lip = 1.0;
    DenseVector lam(r);
    for (int it = 0; it < 5000; ++it) {
      DenseVector next = lam + (1.0 / lip) * (g0 - hess * lam);
      for (auto& v : next) v = std::max(v, 0.0);
      const double change = norm_inf(next - lam);
      lam = std::move(next);
      if (change <= 1e-14) break;
    }
    for (std::size_t i = 0; i < r; ++i)
      if (lam[i] > 1e-12) active.push_back(i);
  } catch (const SingularMatrixError&) {
    active.clear();
  }
  return active;
}

}  // namespace detail

/// Dense QP solver. Equality-only problems take one saddle solve. With
/// inequalities, a dual projected-gradient pass proposes an active set and
/// at most 5r add/drop steps refine it; |Gᵢ| ≤ 1e-10 counts as active.
inline KktPoint qp_solve_dense(const QpData& qp) {
  detail::check_qp(qp);
  const std::size_t q = qp.eq_rows(), r = qp.ineq_rows();
  if (r == 0) {
    auto sol = detail::qp_saddle(qp, {});
    return {std::move(sol.primal), std::move(sol.mult), DenseVector()};
  }
  constexpr double kActiveTol = 1e-10;
  std::vector<std::size_t> active = detail::qp_dual_warm_start(qp);
  for (std::size_t step = 0; step <= 5 * r; ++step) {
    const auto sol = detail::qp_saddle(qp, active);
    // Drop the most negative multiplier first.
    std::size_t drop = active.size();
    double most_negative = -1e-12;
    for (std::size_t i = 0; i < active.size(); ++i) {
      if (sol.mult[q + i] < most_negative) {
        most_negative = sol.mult[q + i];
        drop = i;
      }
    }
    if (drop < active.size()) {
      active.erase(active.begin() + static_cast<std::ptrdiff_t>(drop));
      continue;
    }
    const DenseVector slack = qp.ineq_mat * sol.primal - qp.ineq_rhs;
    std::size_t add = r;
    double worst = kActiveTol;
    for (std::size_t i = 0; i < r; ++i) {
      if (std::find(active.begin(), active.end(), i) != active.end()) continue;
      if (slack[i] > worst) {
        worst = slack[i];
        add = i;
      }
    }
    if (add < r) {
      active.insert(std::upper_bound(active.begin(), active.end(), add), add);
      continue;
    }
    KktPoint out{sol.primal, sol.mult.segment(0, q), DenseVector(r)};
    for (std::size_t i = 0; i < active.size(); ++i) out.ineq_dual[active[i]] = std::max(sol.mult[q + i], 0.0);
    return out;
  }
  throw NumericalError("qp_solve_dense: active-set refinement did not converge");
}

}  // namespace idiff
