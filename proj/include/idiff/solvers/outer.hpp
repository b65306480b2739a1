#pragma once

/// \file outer.hpp
/// \brief Bi-level driver: heavy-ball descent on θ with hypergradients from
/// implicit differentiation of the inner optimality condition.

#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "idiff/autodiff/diff_fn.hpp"
#include "idiff/errors.hpp"
#include "idiff/implicit/implicit.hpp"
#include "idiff/implicit/problem.hpp"
#include "idiff/solvers/inner.hpp"

namespace idiff {

struct OuterConfig {
  double step = 1.0;
  double momentum = 0.9;
  std::size_t iterations = 100;
  /// Overrides `step` when set.
  StepSchedule step_schedule;
  ImplicitConfig implicit;

  void validate() const {
    if (!step_schedule && !(step > 0.0)) throw DomainError("OuterConfig: step must be positive");
    if (!(momentum >= 0.0 && momentum < 1.0)) throw DomainError("OuterConfig: momentum must lie in [0, 1)");
  }
};

/// min_θ L(x*(θ), θ) where x*(θ) is a root of `condition`.
struct BilevelProblem {
  /// Returns x̂(θ); the second argument is the previous solution (x0 on the first call).
  std::function<DenseVector(const DenseVector& theta, const DenseVector& warm)> solve_inner;
  RootProblem condition;
  ScalarFn2 outer_loss;  // L(x, θ)
};

/// loss[k] and grad_norm[k] are taken at thetas[k]; thetas has iterations + 1 entries.
struct OuterTrace {
  std::vector<DenseVector> thetas;
  std::vector<double> loss;
  std::vector<double> grad_norm;
};

struct OuterResult {
  DenseVector theta;
  DenseVector inner_solution;
  OuterTrace trace;
};

/// ∇_θL(x*(θ), θ) = Jᵀ∇ₓL + ∇_θL at x = x̂(θ).
inline DenseVector total_hypergradient(const BilevelProblem& prob, const DenseVector& x, const DenseVector& theta,
                                       const ImplicitConfig& cfg = {}) {
  if (prob.outer_loss.dim_theta == 0) {
    return hypergradient(prob.condition, x, theta, grad_x(prob.outer_loss, x, DenseVector()), cfg);
  }
  return hypergradient(prob.condition, x, theta, grad_x(prob.outer_loss, x, theta), cfg) +
         grad_theta(prob.outer_loss, x, theta);
}

/// Heavy-ball iterations v ← μv + g, θ ← θ − η_k v. Inner and implicit
/// failures are rethrown as NumericalError naming the outer iteration.
inline OuterResult outer_descent(const BilevelProblem& prob, const DenseVector& theta0, const DenseVector& x0,
                                 const OuterConfig& cfg) {
  cfg.validate();
  detail::require_dims(theta0.size() == prob.condition.dim_theta() && x0.size() == prob.condition.dim_x(),
                       "outer_descent: argument size mismatch");
  detail::require_dims(prob.outer_loss.dim_x == prob.condition.dim_x() &&
                           (prob.outer_loss.dim_theta == 0 || prob.outer_loss.dim_theta == theta0.size()),
                       "outer_descent: outer loss dimensions do not match the inner problem");
  auto loss_theta = [&](const DenseVector& th) {
    return prob.outer_loss.dim_theta == 0 ? DenseVector() : th;
  };
  OuterResult res{theta0, x0, {}};
  DenseVector velocity(theta0.size());
  for (std::size_t k = 0;; ++k) {
    DenseVector grad;
    try {
      res.inner_solution = prob.solve_inner(res.theta, res.inner_solution);
      res.trace.thetas.push_back(res.theta);
      res.trace.loss.push_back(prob.outer_loss(res.inner_solution, loss_theta(res.theta)));
      if (k == cfg.iterations) break;
      grad = total_hypergradient(prob, res.inner_solution, res.theta, cfg.implicit);
    } catch (const Error& e) {
      throw NumericalError("outer_descent iteration " + std::to_string(k) + ": " + e.what());
    }
    res.trace.grad_norm.push_back(norm(grad));
    const double eta = cfg.step_schedule ? cfg.step_schedule(k) : cfg.step;
    velocity = cfg.momentum * velocity + grad;
    res.theta -= eta * velocity;
  }
  return res;
}

}  // namespace idiff
