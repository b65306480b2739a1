#pragma once

/// \file implicit.hpp
/// \brief Jacobians of x*(θ) from an optimality mapping F via A J = B with
/// A = −∂₁F(x, θ) and B = ∂₂F(x, θ), evaluated at an approximate solution x.
///
/// Every product with A, Aᵀ, B, Bᵀ goes through the mapping's JVP/VJP, so
/// no Jacobian is formed unless `jacobian_estimate` decides that
/// materializing A is cheaper than n matrix-free solves.

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "idiff/autodiff/diff_fn.hpp"
#include "idiff/errors.hpp"
#include "idiff/implicit/problem.hpp"
#include "idiff/linalg/dense.hpp"
#include "idiff/linalg/krylov.hpp"
#include "idiff/linalg/linear_map.hpp"

namespace idiff {

enum class LinearSolver { CG, GMRES, BiCGSTAB, NormalCG };

struct ImplicitConfig {
  /// nullopt selects CG for symmetric A and BiCGSTAB otherwise.
  std::optional<LinearSolver> linear_solver;
  double tol = kDefaultKrylovTol;
  std::size_t max_iter = 0;  // 0: 10·d
  std::size_t gmres_restart = 0;
  bool fallback_to_least_squares = true;
};

/// Raised when both the primary solve and the least-squares fallback fail.
class ImplicitError : public NumericalError {
 public:
  ImplicitError(const std::string& what, SolveReport report)
      : NumericalError(what), report_(report) {}
  [[nodiscard]] const SolveReport& report() const { return report_; }

 private:
  SolveReport report_;
};

struct ImplicitResult {
  DenseVector value;
  SolveReport report;
  bool near_kink = false;  // a JVP evaluation landed within 1e-9 of a kink
};

struct VjpResult {
  DenseVector value;  // Jᵀv = Bᵀu
  DenseVector adjoint;  // u with Aᵀu = v, reusable against other B
  SolveReport report;
  bool near_kink = false;
};

struct JacobianEstimate {
  DenseMatrix matrix;  // d × n
  std::vector<SolveReport> reports;  // one per column
  bool near_kink = false;

  [[nodiscard]] bool used_fallback() const {
    for (const auto& r : reports)
      if (r.used_least_squares_fallback) return true;
    return false;
  }
};

namespace detail {

class KinkProbe {
 public:
  KinkProbe() : start_(kink_hits()) {}
  [[nodiscard]] bool hit() const { return kink_hits() != start_; }

 private:
  std::size_t start_;
};

inline void check_point(const RootProblem& rp, const DenseVector& x, const DenseVector& theta) {
  require_dims(x.size() == rp.dim_x(), "implicit: x has wrong length");
  require_dims(theta.size() == rp.dim_theta(), "implicit: theta has wrong length");
}

/// Solves op(u) = rhs with the configured method and the least-squares fallback.
inline SolveResult<DenseVector> solve_system(const LinearMap& op, const DenseVector& rhs,
                                             OperatorStructure structure, const ImplicitConfig& cfg) {
  if (!(cfg.tol > 0.0)) throw DomainError("ImplicitConfig: tol must be positive");
  const LinearSolver method = cfg.linear_solver.value_or(
      structure == OperatorStructure::General ? LinearSolver::BiCGSTAB : LinearSolver::CG);

  SolveResult<DenseVector> res;
  switch (method) {
    case LinearSolver::CG:
      if (structure == OperatorStructure::SymmetricNegative) {
        res = cg_solve(op.negated(), -rhs, cfg.tol, cfg.max_iter);
      } else {
        res = cg_solve(op, rhs, cfg.tol, cfg.max_iter);
      }
      break;
    case LinearSolver::GMRES:
      res = gmres_solve(op, rhs, cfg.tol, cfg.max_iter, cfg.gmres_restart);
      break;
    case LinearSolver::BiCGSTAB:
      res = bicgstab_solve(op, rhs, cfg.tol, cfg.max_iter);
      break;
    case LinearSolver::NormalCG:
      res = normal_cg_solve(op, rhs, cfg.tol, cfg.max_iter);
      break;
  }
  if (res.report.converged) return res;
  if (!cfg.fallback_to_least_squares || method == LinearSolver::NormalCG) {
    throw ImplicitError("implicit: linear solve did not converge (residual " +
                            std::to_string(res.report.final_residual_norm) + ")",
                        res.report);
  }
  SolveResult<DenseVector> ls = normal_cg_solve(op, rhs, cfg.tol, cfg.max_iter);
  ls.report.used_least_squares_fallback = true;
  ls.report.iterations += res.report.iterations;
  if (!ls.report.converged) {
    throw ImplicitError("implicit: linear solve and least-squares fallback both failed (residual " +
                            std::to_string(ls.report.final_residual_norm) + ")",
                        ls.report);
  }
  return ls;
}

}  // namespace detail

/// A = −∂₁F(x, θ) as a matrix-free operator. Its transpose uses the mapping's
/// VJP closure, A itself when A is symmetric, or a cached materialization.
inline LinearMap a_operator(const RootProblem& rp, const DenseVector& x, const DenseVector& theta) {
  detail::check_point(rp, x, theta);
  const std::size_t d = rp.dim_x();
  LinearMap::Apply fwd = [f = rp.f_map, x, theta](const DenseVector& v) { return -jvp_x(f, x, theta, v); };
  LinearMap::Apply bwd;
  if (rp.symmetric()) {
    bwd = fwd;
  } else if (rp.f_map.vjp_x) {
    bwd = [f = rp.f_map, x, theta](const DenseVector& w) { return -vjp_x(f, x, theta, w); };
  }
  return LinearMap(d, d, std::move(fwd), std::move(bwd));
}

/// B = ∂₂F(x, θ) as a matrix-free operator R^n -> R^d.
inline LinearMap b_operator(const RootProblem& rp, const DenseVector& x, const DenseVector& theta) {
  detail::check_point(rp, x, theta);
  LinearMap::Apply fwd = [f = rp.f_map, x, theta](const DenseVector& w) { return jvp_theta(f, x, theta, w); };
  LinearMap::Apply bwd;
  if (rp.f_map.vjp_theta) {
    bwd = [f = rp.f_map, x, theta](const DenseVector& v) { return vjp_theta(f, x, theta, v); };
  }
  return LinearMap(rp.dim_x(), rp.dim_theta(), std::move(fwd), std::move(bwd));
}

/// J·w from A(Jw) = Bw.
inline ImplicitResult root_jvp(const RootProblem& rp, const DenseVector& x, const DenseVector& theta,
                               const DenseVector& w, const ImplicitConfig& cfg = {}) {
  detail::check_point(rp, x, theta);
  detail::require_dims(w.size() == rp.dim_theta(), "root_jvp: direction has wrong length");
  const detail::KinkProbe probe;
  const DenseVector bw = jvp_theta(rp.f_map, x, theta, w);
  auto sol = detail::solve_system(a_operator(rp, x, theta), bw, rp.structure, cfg);
  return {std::move(sol.x), sol.report, probe.hit()};
}

/// Bᵀu for a given adjoint u; lets one solve of Aᵀu = v serve several B.
inline DenseVector apply_b_transpose(const RootProblem& rp, const DenseVector& x, const DenseVector& theta,
                                     const DenseVector& u) {
  detail::check_point(rp, x, theta);
  return vjp_theta(rp.f_map, x, theta, u);
}

/// Jᵀv = Bᵀu where Aᵀu = v.
inline VjpResult root_vjp(const RootProblem& rp, const DenseVector& x, const DenseVector& theta,
                          const DenseVector& v, const ImplicitConfig& cfg = {}) {
  detail::check_point(rp, x, theta);
  detail::require_dims(v.size() == rp.dim_x(), "root_vjp: cotangent has wrong length");
  const detail::KinkProbe probe;
  const LinearMap a_t = a_operator(rp, x, theta).transposed();
  auto sol = detail::solve_system(a_t, v, rp.structure, cfg);
  DenseVector value = apply_b_transpose(rp, x, theta, sol.x);
  return {std::move(value), std::move(sol.x), sol.report, probe.hit()};
}

/// The Jacobian estimate J(x, θ) solving A J = B column by column.
///
/// When n ≥ 2 columns are requested, A is materialized once from d JVPs and
/// each column's Krylov solve runs on the dense copy.
inline JacobianEstimate jacobian_estimate(const RootProblem& rp, const DenseVector& x,
                                          const DenseVector& theta, const ImplicitConfig& cfg = {}) {
  detail::check_point(rp, x, theta);
  const std::size_t d = rp.dim_x(), n = rp.dim_theta();
  const detail::KinkProbe probe;
  LinearMap a = a_operator(rp, x, theta);
  if (n >= 2) a = LinearMap::from_matrix(a.materialize());
  JacobianEstimate est{DenseMatrix(d, n), {}, false};
  est.reports.reserve(n);
  for (std::size_t j = 0; j < n; ++j) {
    const DenseVector bj = jvp_theta(rp.f_map, x, theta, DenseVector::unit(n, j));
    auto sol = detail::solve_system(a, bj, rp.structure, cfg);
    est.matrix.set_col(j, sol.x);
    est.reports.push_back(sol.report);
  }
  est.near_kink = probe.hit();
  return est;
}

/// ∇_θ L(x*(θ)) = Jᵀ∇L(x̂) for an outer loss L depending on θ only through x.
inline DenseVector hypergradient(const RootProblem& rp, const DenseVector& x, const DenseVector& theta,
                                 const DenseVector& outer_grad, const ImplicitConfig& cfg = {}) {
  return root_vjp(rp, x, theta, outer_grad, cfg).value;
}

}  // namespace idiff
