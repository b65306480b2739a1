#pragma once

/// \file inner.hpp
/// \brief Inner solvers producing x̂ ≈ x*(θ). All run for a fixed number of
/// iterations and record a SolverTrace.

#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "idiff/autodiff/diff_fn.hpp"
#include "idiff/conditions/fixed_points.hpp"
#include "idiff/errors.hpp"
#include "idiff/linalg/dense.hpp"
#include "idiff/operators/operators.hpp"

namespace idiff {

struct TraceOptions {
  /// Store every k-th iterate (and the last); 0 stores none.
  std::size_t keep_every = 1;
  /// When set, ‖x_t − reference‖ is recorded for every t.
  std::optional<DenseVector> reference;
  /// Added to f in the recorded objective, e.g. the nonsmooth term of a prox method.
  std::function<double(const DenseVector&)> penalty;
};

/// Iterates x_0..x_T (thinned), objective values and optional distances to a
/// reference point. `objective` and `error` have one entry per iteration
/// including t = 0; `iterates[k]` is x at `iterate_index[k]`.
struct SolverTrace {
  std::vector<DenseVector> iterates;
  std::vector<std::size_t> iterate_index;
  std::vector<double> objective;
  std::vector<double> error;

  [[nodiscard]] std::size_t steps() const { return objective.empty() ? 0 : objective.size() - 1; }
};

struct SolverResult {
  DenseVector x;
  SolverTrace trace;
};

/// Raised when the objective stops being finite; carries the trace so far.
class SolverError : public NumericalError {
 public:
  SolverError(const std::string& what, SolverTrace trace) : NumericalError(what), trace_(std::move(trace)) {}
  [[nodiscard]] const SolverTrace& trace() const { return trace_; }

 private:
  SolverTrace trace_;
};

/// Step size as a function of the iteration counter t = 0, 1, ...
using StepSchedule = std::function<double(std::size_t)>;

namespace schedule {

inline StepSchedule constant(double step) {
  if (!(step > 0.0)) throw DomainError("constant schedule: step must be positive");
  return [step](std::size_t) { return step; };
}

/// `step` for the first `warmup` iterations, then step·√(warmup / (t + 1)).
inline StepSchedule warmup_inverse_sqrt(double step = 1.0, std::size_t warmup = 100) {
  if (!(step > 0.0)) throw DomainError("warmup_inverse_sqrt: step must be positive");
  if (warmup == 0) throw DomainError("warmup_inverse_sqrt: warmup must be positive");
  return [step, warmup](std::size_t t) {
    if (t < warmup) return step;
    return step * std::sqrt(static_cast<double>(warmup) / static_cast<double>(t + 1));
  };
}

}  // namespace schedule

namespace detail {

class TraceRecorder {
 public:
  TraceRecorder(const ScalarFn2& f, const DenseVector& theta, TraceOptions opts)
      : f_(f), theta_(theta), opts_(std::move(opts)) {}

  void record(const DenseVector& x, std::size_t t, bool last) {
    double value = f_(x, theta_);
    if (opts_.penalty) value += opts_.penalty(x);
    trace_.objective.push_back(value);
    if (opts_.reference) trace_.error.push_back(norm(x - *opts_.reference));
    if (opts_.keep_every != 0 && (t % opts_.keep_every == 0 || last)) {
      trace_.iterates.push_back(x);
      trace_.iterate_index.push_back(t);
    }
    if (!std::isfinite(value)) {
      throw SolverError("solver: objective is not finite at iteration " + std::to_string(t), trace_);
    }
  }

  SolverResult finish(DenseVector x) { return {std::move(x), std::move(trace_)}; }

 private:
  const ScalarFn2& f_;
  const DenseVector& theta_;
  TraceOptions opts_;
  SolverTrace trace_;
};

inline void check_start(const ScalarFn2& f, const DenseVector& theta, const DenseVector& x0, const char* who) {
  require_dims(x0.size() == f.dim_x && theta.size() == f.dim_theta, std::string(who) + ": argument size mismatch");
}

}  // namespace detail

inline constexpr double kArmijoSigma = 1e-4;
inline constexpr int kMaxHalvings = 60;

/// x_{t+1} = x_t − η_t∇ₓf(x_t, θ). With line search, η_t starts at 1 and is
/// halved until f(x_t − η_t g) ≤ f(x_t) − σ·η_t‖g‖² (σ = 1e-4); otherwise
/// η_t = `step`.
inline SolverResult gradient_descent(const ScalarFn2& f, const DenseVector& theta, const DenseVector& x0,
                                     std::size_t steps, bool line_search, double step = 1.0,
                                     TraceOptions opts = {}) {
  detail::check_start(f, theta, x0, "gradient_descent");
  if (!line_search) detail::check_step(step, "gradient_descent");
  detail::TraceRecorder rec(f, theta, std::move(opts));
  DenseVector x = x0;
  rec.record(x, 0, steps == 0);
  for (std::size_t t = 0; t < steps; ++t) {
    const DenseVector g = grad_x(f, x, theta);
    double eta = step;
    if (line_search) {
      const double fx = f(x, theta), gg = squared_norm(g);
      eta = 1.0;
      for (int k = 0; k < kMaxHalvings; ++k) {
        const double trial = f(x - eta * g, theta);
        if (std::isfinite(trial) && trial <= fx - kArmijoSigma * eta * gg) break;
        eta *= 0.5;
      }
    }
    x -= eta * g;
    rec.record(x, t + 1, t + 1 == steps);
  }
  return rec.finish(std::move(x));
}

/// ISTA, or FISTA when `accelerated`: x_{t+1} = prox_{ηg}(y_t − η∇ₓf(y_t, θ), θ).
inline SolverResult proximal_gradient(const ScalarFn2& f, const ProxOperator& prox, const DenseVector& theta,
                                      const DenseVector& x0, std::size_t steps, double step, bool accelerated,
                                      TraceOptions opts = {}) {
  detail::check_start(f, theta, x0, "proximal_gradient");
  detail::check_step(step, "proximal_gradient");
  detail::require_dims(prox.dim == f.dim_x, "proximal_gradient: prox dimension must match x");
  detail::check_operator_param(prox.dim_param, f.dim_theta, "proximal_gradient");
  const DenseVector param = detail::operator_param(prox.dim_param, theta);
  detail::TraceRecorder rec(f, theta, std::move(opts));
  DenseVector x = x0, y = x0;
  double momentum = 1.0;
  rec.record(x, 0, steps == 0);
  for (std::size_t t = 0; t < steps; ++t) {
    DenseVector next = prox.apply(y - step * grad_x(f, y, theta), param, step);
    if (accelerated) {
      const double m_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
      y = next + ((momentum - 1.0) / m_next) * (next - x);
      momentum = m_next;
    } else {
      y = next;
    }
    x = std::move(next);
    rec.record(x, t + 1, t + 1 == steps);
  }
  return rec.finish(std::move(x));
}

/// x_{t+1} = proj^φ_C(∇φ(x_t) − η_t∇ₓf(x_t, θ), θ).
inline SolverResult mirror_descent(const ScalarFn2& f, const MirrorMap& mirror, const BregmanProjOperator& bproj,
                                   const DenseVector& theta, const DenseVector& x0, std::size_t steps,
                                   const StepSchedule& steps_at = schedule::warmup_inverse_sqrt(),
                                   TraceOptions opts = {}) {
  detail::check_start(f, theta, x0, "mirror_descent");
  detail::require_dims(mirror.dim == f.dim_x && bproj.dim == f.dim_x,
                       "mirror_descent: mirror map and projection dimensions must match x");
  detail::check_operator_param(bproj.dim_param, f.dim_theta, "mirror_descent");
  const DenseVector param = detail::operator_param(bproj.dim_param, theta);
  detail::TraceRecorder rec(f, theta, std::move(opts));
  DenseVector x = x0;
  rec.record(x, 0, steps == 0);
  for (std::size_t t = 0; t < steps; ++t) {
    const double eta = steps_at(t);
    detail::check_step(eta, "mirror_descent");
    x = bproj.apply(mirror.to_dual(x) - eta * grad_x(f, x, theta), param);
    rec.record(x, t + 1, t + 1 == steps);
  }
  return rec.finish(std::move(x));
}

/// Cyclic block updates: each sweep visits the blocks in order and replaces
/// block i by prox_{ηᵢgᵢ}(xᵢ − ηᵢ[∇ₓf(x, θ)]ᵢ) using the current x. One step
/// is one sweep.
inline SolverResult block_coordinate_descent(const ScalarFn2& f, std::vector<ProxBlock> blocks,
                                             const DenseVector& theta, const DenseVector& x0, std::size_t steps,
                                             TraceOptions opts = {}) {
  detail::check_start(f, theta, x0, "block_coordinate_descent");
  blocks = detail::sorted_blocks(f, std::move(blocks));
  detail::TraceRecorder rec(f, theta, std::move(opts));
  DenseVector x = x0;
  rec.record(x, 0, steps == 0);
  for (std::size_t t = 0; t < steps; ++t) {
    for (const ProxBlock& b : blocks) {
      const DenseVector g = grad_x(f, x, theta);
      const std::size_t at = b.range.start, len = b.range.length;
      const DenseVector y = x.segment(at, len) - b.step * g.segment(at, len);
      x.set_segment(at, b.prox.apply(y, detail::operator_param(b.prox.dim_param, theta), b.step));
    }
    rec.record(x, t + 1, t + 1 == steps);
  }
  return rec.finish(std::move(x));
}

}  // namespace idiff
