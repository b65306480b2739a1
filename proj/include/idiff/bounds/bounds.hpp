#pragma once

/// \file bounds.hpp
/// \brief Error bounds on Jacobian estimates as a function of the iterate
/// error ‖x̂ − x*‖, plus the ridge instance for which every constant is
/// computable.

#include <cmath>
#include <cstddef>
#include <limits>
#include <utility>

#include "idiff/errors.hpp"
#include "idiff/linalg/dense.hpp"
#include "idiff/linalg/lu.hpp"

namespace idiff {

/// Constants of the Jacobian-precision bounds.
///   alpha: lower bound on the smallest singular value of A
///   beta:  Lipschitz constant of B in x
///   gamma: Lipschitz constant of A in x
///   radius_b: bound R on ‖B(x*, θ)‖
///   validity: radius ε within which the bound holds
///   strong_convexity: μ of the nonsmooth term g (proximal variant)
///   prox_lipschitz: κ_η of the proximal residual map (proximal variant)
struct BoundConstants {
  double alpha = 1.0;
  double beta = 0.0;
  double gamma = 0.0;
  double radius_b = 0.0;
  double validity = std::numeric_limits<double>::infinity();
  double strong_convexity = 0.0;
  double prox_lipschitz = 0.0;

  void validate() const {
    if (!(alpha > 0.0)) throw DomainError("BoundConstants: alpha must be positive");
    for (double c : {beta, gamma, radius_b, validity, strong_convexity, prox_lipschitz}) {
      if (!(c >= 0.0)) throw DomainError("BoundConstants: constants must be nonnegative");
    }
  }
};

/// `valid` is false when the iterate error exceeds the validity radius.
struct BoundValue {
  double value = 0.0;
  bool valid = true;
};

/// (β/α + γR/α²)·‖x̂ − x*‖.
inline BoundValue theorem1_bound(const BoundConstants& k, double iterate_error) {
  k.validate();
  if (!(iterate_error >= 0.0)) throw DomainError("theorem1_bound: iterate error must be nonnegative");
  const double slope = k.beta / k.alpha + k.gamma * k.radius_b / (k.alpha * k.alpha);
  return {slope * iterate_error, iterate_error <= k.validity};
}

/// ((β + κ_η)/(α + μ) + γR/(α + μ)²)·‖x̂ − x*‖.
inline BoundValue corollary2_bound(const BoundConstants& k, double iterate_error) {
  k.validate();
  if (!(iterate_error >= 0.0)) throw DomainError("corollary2_bound: iterate error must be nonnegative");
  const double denom = k.alpha + k.strong_convexity;
  const double slope = (k.beta + k.prox_lipschitz) / denom + k.gamma * k.radius_b / (denom * denom);
  return {slope * iterate_error, iterate_error <= k.validity};
}

/// min_x ‖Φx − y‖² + Σθᵢxᵢ².
struct RidgeProblemData {
  DenseMatrix design;  // Φ, m×d
  DenseVector target;  // y, length m
  DenseVector theta;   // length d, positive

  void validate() const {
    detail::require_dims(design.rows() == target.size() && design.cols() == theta.size() && !theta.empty(),
                         "RidgeProblemData: Φ must be m×d with y of length m and θ of length d");
    for (double t : theta) {
      if (!(t > 0.0)) throw DomainError("RidgeProblemData: θ must be positive");
    }
  }

  /// ΦᵀΦ + diag θ, half the Hessian.
  [[nodiscard]] DenseMatrix system() const {
    DenseMatrix m = design.transpose() * design;
    for (std::size_t i = 0; i < theta.size(); ++i) m(i, i) += theta[i];
    return m;
  }
};

struct RidgeSolution {
  DenseVector x;
  DenseMatrix jacobian;  // ∂x*/∂θ, d×d
};

/// x* = (ΦᵀΦ + diag θ)⁻¹Φᵀy; column j of ∂x*/∂θ is −(ΦᵀΦ + diag θ)⁻¹eⱼx*ⱼ.
inline RidgeSolution ridge_closed_form(const RidgeProblemData& p) {
  p.validate();
  const LuFactorization lu(p.system());
  RidgeSolution out{lu.solve(transpose_mul(p.design, p.target)), DenseMatrix(p.theta.size(), p.theta.size())};
  for (std::size_t j = 0; j < p.theta.size(); ++j) {
    out.jacobian.set_col(j, -out.x[j] * lu.solve(DenseVector::unit(p.theta.size(), j)));
  }
  return out;
}

/// For the ridge objective: the Hessian 2(ΦᵀΦ + diag θ) is constant in x, so
/// γ = 0 and the bound holds globally; ∂₂∇₁f = 2 diag(x) gives β = 2 and
/// R = 2‖x*‖; α = 2λ_min(ΦᵀΦ + diag θ).
inline BoundConstants ridge_constants(const RidgeProblemData& p) {
  p.validate();
  BoundConstants k;
  k.alpha = 2.0 * symmetric_eigenvalues(p.system()).front();
  k.beta = 2.0;
  k.gamma = 0.0;
  k.radius_b = 2.0 * norm(ridge_closed_form(p).x);
  k.validity = std::numeric_limits<double>::infinity();
  return k;
}

}  // namespace idiff
