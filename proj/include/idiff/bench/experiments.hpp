#pragma once

/// \file experiments.hpp
/// \brief Desk-scale experiments. Each returns its main table, optional
/// attached tables, scalar metadata and per-phase wall times. Only the
/// timings depend on anything but the configuration.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "idiff/autodiff/diff_fn.hpp"
#include "idiff/bench/config.hpp"
#include "idiff/bench/csv.hpp"
#include "idiff/bench/data.hpp"
#include "idiff/bench/rng.hpp"
#include "idiff/bounds/bounds.hpp"
#include "idiff/conditions/fixed_points.hpp"
#include "idiff/implicit/implicit.hpp"
#include "idiff/implicit/problem.hpp"
#include "idiff/linalg/lu.hpp"
#include "idiff/operators/operators.hpp"
#include "idiff/solvers/inner.hpp"
#include "idiff/solvers/outer.hpp"
#include "idiff/solvers/unrolled.hpp"

namespace idiff::bench {

struct ExperimentOutput {
  CsvTable table;
  /// (file suffix, table) pairs written next to the main CSV.
  std::vector<std::pair<std::string, CsvTable>> attachments;
  std::vector<std::pair<std::string, double>> metadata;
  PhaseTimes timings;
};

// ===========================================================================
// Ridge regression: Jacobian precision along gradient descent

/// Φ has N(0, 1/m) entries, y is N(0, 1) and θᵢ ~ U[0.1, 0.2].
inline RidgeProblemData make_ridge_instance(std::uint64_t seed, std::size_t m, std::size_t d) {
  CounterRng design = CounterRng::stream(seed, "ridge/design");
  CounterRng target = CounterRng::stream(seed, "ridge/target");
  CounterRng reg = CounterRng::stream(seed, "ridge/regularization");
  RidgeProblemData p{design.normal_matrix(m, d, 1.0 / std::sqrt(static_cast<double>(m))),
                     target.normal_vector(m), DenseVector(d)};
  for (double& t : p.theta) t = reg.uniform(0.1, 0.2);
  return p;
}

/// f(x, θ) = ‖Φx − y‖² + Σθᵢxᵢ² with the closed-form gradient 2(ΦᵀΦx − Φᵀy + θ∘x).
inline ScalarFn2 ridge_objective(const RidgeProblemData& p) {
  const DenseMatrix phi = p.design, gram = p.design.transpose() * p.design;
  const DenseVector y = p.target, c = transpose_mul(p.design, p.target);
  return make_scalar_fn(
      p.theta.size(), p.theta.size(),
      [phi, y](const auto& x, const auto& th) { return squared_norm(phi * x - y) + dot(th, cwise_mul(x, x)); },
      [gram, c](const auto& x, const auto& th) { return 2.0 * (gram * x - c + cwise_mul(th, x)); });
}

/// Tolerance of the Krylov solves behind the implicit Jacobians.
inline constexpr double kRidgeKrylovTol = 1e-13;

/// One row per GD iteration t = 1..inner_iters, started at x₀ = 0 with step
/// 1/L, L = 2λ_max(ΦᵀΦ + diag θ). Errors are Frobenius (Jacobians) and
/// Euclidean (iterates) distances to the closed-form solution.
inline ExperimentOutput exp_ridge_precision(const ExperimentConfig& cfg) {
  cfg.validate();
  ExperimentOutput out{CsvTable({"t", "iterate_error", "implicit_jac_error", "unrolled_jac_error", "theorem1_bound"}),
                       {}, {}, {}};
  const std::size_t d = cfg.dims.p, steps = cfg.inner_iters;
  const RidgeProblemData data = out.timings.run("data", [&] { return make_ridge_instance(cfg.seed, cfg.dims.m, d); });
  const RidgeSolution truth = out.timings.run("closed_form", [&] { return ridge_closed_form(data); });
  const BoundConstants consts = ridge_constants(data);
  const ScalarFn2 f = ridge_objective(data);
  const double step = 1.0 / (2.0 * max_eigenvalue_psd(data.system()));
  const DenseVector x0(d);

  TraceOptions keep_all;
  keep_all.keep_every = 1;
  const SolverResult gd = out.timings.run(
      "inner_solve", [&] { return gradient_descent(f, data.theta, x0, steps, false, step, keep_all); });
  const UnrolledPath unrolled = out.timings.run(
      "unrolled", [&] { return unrolled_jacobian_path(gradient_descent_fp(f, step).t_map, data.theta, x0, steps); });

  const RootProblem condition = stationary_condition(f);
  ImplicitConfig icfg;
  icfg.tol = kRidgeKrylovTol;
  out.timings.run("implicit", [&] {
    for (std::size_t t = 1; t <= steps; ++t) {
      const DenseVector& xt = gd.trace.iterates[t];
      const JacobianEstimate est = jacobian_estimate(condition, xt, data.theta, icfg);
      const double iterate_error = norm(xt - truth.x);
      out.table.add_row({static_cast<double>(t), iterate_error, frobenius_norm(est.matrix - truth.jacobian),
                         frobenius_norm(unrolled.jacobians[t] - truth.jacobian),
                         theorem1_bound(consts, iterate_error).value});
    }
  });
  out.metadata = {{"alpha", consts.alpha}, {"beta", consts.beta}, {"gamma", consts.gamma},
                  {"radius_b", consts.radius_b}, {"step", step}};
  return out;
}

// ===========================================================================
// Multiclass SVM dual: hyperparameter search on log-regularization λ
//
// x is m×k, stored sample-major (entry (i, c) at i·k + c) so every sample's
// simplex is a contiguous block. With R = Y_tr − x and θ = e^λ:
//   f(x, λ) = ‖X_trᵀR‖²/(2θ) + ⟨x, Y_tr⟩,   W = X_trᵀR/θ,
//   L(x, λ) = ½‖X_val W − Y_val‖².

inline constexpr std::size_t kSvmValidationSamples = 50;
inline constexpr double kSvmInformativeFrac = 0.1;
inline constexpr double kSvmOuterStep = 5e-3;
inline constexpr std::size_t kSvmOuterWarmup = 100;
inline constexpr std::size_t kSvmMirrorWarmup = 100;
inline constexpr double kSvmFdStep = 1e-6;
/// Below λ ≈ 0.3 the default training set is fit with a hard margin and the
/// validation loss is flat in λ; the search starts where it is not.
inline constexpr double kSvmInitialLambda = 2.0;
inline constexpr std::size_t kSvmReferenceIters = 2000;

struct SvmInstance {
  std::size_t m = 0, k = 0, m_val = 0;
  DenseMatrix gram;       // X_tr X_trᵀ
  DenseMatrix val_cross;  // X_val X_trᵀ
  DenseVector y_train;    // sample-major one-hot
  DenseVector y_val;
  double gram_max_eigenvalue = 0.0;
};

inline DenseVector sample_major(const DenseMatrix& a) {
  DenseVector v(a.rows() * a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t c = 0; c < a.cols(); ++c) v[i * a.cols() + c] = a(i, c);
  return v;
}

inline SvmInstance make_svm_instance(std::uint64_t seed, const Dims& dims) {
  const ClassificationData tr = gen_classification(seed, dims.m, dims.p, dims.k, kSvmInformativeFrac, "train");
  const ClassificationData val =
      gen_classification(seed, kSvmValidationSamples, dims.p, dims.k, kSvmInformativeFrac, "validation");
  SvmInstance s;
  s.m = dims.m;
  s.k = dims.k;
  s.m_val = kSvmValidationSamples;
  // Features scaled by 1/√p keep the Gram spectrum O(1), so at θ = 1 the
  // solution is not in the regime where W is locally constant in θ.
  const double scale = 1.0 / static_cast<double>(dims.p);
  const DenseMatrix xt = tr.features.transpose();
  s.gram = scale * (tr.features * xt);
  s.val_cross = scale * (val.features * xt);
  s.y_train = sample_major(one_hot(tr.labels, dims.k));
  s.y_val = sample_major(one_hot(val.labels, dims.k));
  s.gram_max_eigenvalue = max_eigenvalue_psd(s.gram);
  return s;
}

/// (A ⊗ I_k)r for sample-major r.
template <class S>
BasicVector<S> apply_kron_identity(const DenseMatrix& a, const BasicVector<S>& r, std::size_t k) {
  detail::require_dims(r.size() == a.cols() * k, "apply_kron_identity: size mismatch");
  BasicVector<S> out(a.rows() * k);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) {
      const double w = a(i, j);
      if (w == 0.0) continue;
      for (std::size_t c = 0; c < k; ++c) out[i * k + c] += w * r[j * k + c];
    }
  }
  return out;
}

inline ScalarFn2 svm_objective(const SvmInstance& s) {
  const DenseMatrix gram = s.gram;
  const DenseVector y = s.y_train;
  const std::size_t k = s.k;
  return make_scalar_fn(
      s.m * k, 1,
      [gram, y, k](const auto& x, const auto& lam) {
        const auto r = y - x;
        return 0.5 * exp(-lam[0]) * dot(r, apply_kron_identity(gram, r, k)) + dot(y, x);
      },
      [gram, y, k](const auto& x, const auto& lam) {
        const auto r = y - x;
        return y - exp(-lam[0]) * apply_kron_identity(gram, r, k);
      });
}

inline ScalarFn2 svm_validation_loss(const SvmInstance& s) {
  const DenseMatrix cross = s.val_cross;
  const DenseVector y = s.y_train, yv = s.y_val;
  const std::size_t k = s.k;
  return make_scalar_fn(s.m * k, 1, [cross, y, yv, k](const auto& x, const auto& lam) {
    const auto r = y - x;
    return 0.5 * squared_norm(exp(-lam[0]) * apply_kron_identity(cross, r, k) - yv);
  });
}

/// Euclidean projection of every length-k block onto the simplex.
inline ProjOperator per_sample_simplex(std::size_t m, std::size_t k) {
  return make_projection("per-sample simplex", m * k, 0, [m, k](const auto& y, const auto&) {
    using S = detail::scalar_of<decltype(y)>;
    BasicVector<S> out(y.size());
    for (std::size_t i = 0; i < m; ++i) out.set_segment(i * k, proj_simplex(y.segment(i * k, k)));
    return out;
  });
}

/// Softmax of every length-k block.
inline BregmanProjOperator per_sample_kl_simplex(std::size_t m, std::size_t k) {
  return {"per-sample kl simplex", m * k, 0, make_poly<BinaryVecSig>([m, k](const auto& y, const auto&) {
            using S = detail::scalar_of<decltype(y)>;
            BasicVector<S> out(y.size());
            for (std::size_t i = 0; i < m; ++i) out.set_segment(i * k, kl_proj_simplex(y.segment(i * k, k)));
            return out;
          })};
}

/// 1/L for the current λ, L = λ_max(X_tr X_trᵀ)/e^λ.
inline double svm_step(const SvmInstance& s, double lam) { return std::exp(lam) / s.gram_max_eigenvalue; }

/// Inner solution after `iters` iterations of the named solver from `warm`.
/// Mirror descent uses step 1/L for 100 iterations then inverse-square-root
/// decay; proximal gradient is FISTA with step 1/L; block coordinate descent
/// runs iters/5 sweeps over the samples with per-block steps e^λ/G_ii.
inline DenseVector svm_solve(const SvmInstance& s, const std::string& solver, double lam, const DenseVector& warm,
                             std::size_t iters) {
  const ScalarFn2 f = svm_objective(s);
  const DenseVector th{lam};
  const double eta = svm_step(s, lam);
  TraceOptions quiet;
  quiet.keep_every = 0;
  if (solver == "md") {
    return mirror_descent(f, mirror::kl(s.m * s.k), per_sample_kl_simplex(s.m, s.k), th, warm, iters,
                          schedule::warmup_inverse_sqrt(eta, kSvmMirrorWarmup), quiet)
        .x;
  }
  if (solver == "pg") {
    return proximal_gradient(f, prox::from_projection(per_sample_simplex(s.m, s.k)), th, warm, iters, eta, true,
                             quiet)
        .x;
  }
  if (solver == "bcd") {
    std::vector<ProxBlock> blocks;
    const ProxOperator simplex = prox::from_projection(projection::simplex(s.k));
    for (std::size_t i = 0; i < s.m; ++i) blocks.push_back({{i * s.k, s.k}, simplex, std::exp(lam) / s.gram(i, i)});
    return block_coordinate_descent(f, blocks, th, warm, std::max<std::size_t>(1, iters / 5), quiet).x;
  }
  throw ConfigError("svm-hpo: unknown solver '" + solver + "'");
}

/// High-accuracy solution for the finite-difference oracle: projected
/// gradient without momentum, monotone for step 1/L.
inline DenseVector svm_reference_solve(const SvmInstance& s, double lam, const DenseVector& warm) {
  TraceOptions quiet;
  quiet.keep_every = 0;
  return proximal_gradient(svm_objective(s), prox::from_projection(per_sample_simplex(s.m, s.k)), DenseVector{lam},
                           warm, kSvmReferenceIters, svm_step(s, lam), false, quiet)
      .x;
}

inline RootProblem svm_condition(const SvmInstance& s, const std::string& condition, double lam) {
  const ScalarFn2 f = svm_objective(s);
  const double eta = svm_step(s, lam);
  if (condition == "md-fp") {
    return to_root(mirror_descent_fp(f, mirror::kl(s.m * s.k), per_sample_kl_simplex(s.m, s.k), eta));
  }
  if (condition == "pg-fp") {
    return to_root(proximal_gradient_fp(f, prox::from_projection(per_sample_simplex(s.m, s.k)), eta));
  }
  if (condition == "proj-fp") return to_root(projected_gradient_fp(f, per_sample_simplex(s.m, s.k), eta));
  throw ConfigError("svm-hpo: unknown condition '" + condition + "'");
}

/// The condition cross-checked against the configured one.
inline std::string svm_cross_condition(const std::string& condition) {
  return condition == "md-fp" ? "pg-fp" : "md-fp";
}

struct SvmStep {
  double lambda = 0.0;
  double validation_loss = 0.0;
  double hypergradient = 0.0;        // configured condition
  double hypergradient_cross = 0.0;  // svm_cross_condition
  double hypergradient_fd = 0.0;
  double fd_relerr = 0.0;
};

inline double relative_difference(double a, double reference) {
  const double diff = std::fabs(a - reference);
  return reference == 0.0 ? diff : diff / std::fabs(reference);
}

/// Outer gradient descent on λ from λ₀ = 2 with step 5e-3 for 100 steps then
/// inverse-square-root decay. Every step re-solves the inner problem warm,
/// computes the hypergradient under the configured and the cross-check
/// condition, and a central difference of λ ↦ L(x*(λ), λ) with h = 1e-6.
inline std::vector<SvmStep> svm_hpo_run(const ExperimentConfig& cfg, const SvmInstance& s, PhaseTimes& timings) {
  const ScalarFn2 outer = svm_validation_loss(s);
  const StepSchedule outer_step = schedule::warmup_inverse_sqrt(kSvmOuterStep, kSvmOuterWarmup);
  const std::string cross = svm_cross_condition(cfg.condition);
  ImplicitConfig icfg;
  icfg.tol = 1e-12;
  auto hypergrad = [&](const std::string& condition, const DenseVector& x, double lam) {
    BilevelProblem prob{nullptr, svm_condition(s, condition, lam), outer};
    return total_hypergradient(prob, x, DenseVector{lam}, icfg)[0];
  };

  std::vector<SvmStep> steps;
  double lam = kSvmInitialLambda;
  // Every inner solve starts from the uniform point: mirror descent only
  // revives near-zero coordinates multiplicatively, so warm starts stall
  // when the support grows along the path.
  const DenseVector x_init(s.m * s.k, 1.0 / static_cast<double>(s.k));
  for (std::size_t t = 0; t < cfg.outer_iters; ++t) {
    SvmStep row;
    row.lambda = lam;
    const DenseVector x =
        timings.run("inner_solve", [&] { return svm_solve(s, cfg.solver, lam, x_init, cfg.inner_iters); });
    row.validation_loss = outer(x, DenseVector{lam});
    timings.run("hypergradient", [&] {
      row.hypergradient = hypergrad(cfg.condition, x, lam);
      row.hypergradient_cross = hypergrad(cross, x, lam);
    });
    timings.run("finite_difference", [&] {
      const double up = lam + kSvmFdStep, down = lam - kSvmFdStep;
      const double l_up = outer(svm_reference_solve(s, up, x), DenseVector{up});
      const double l_down = outer(svm_reference_solve(s, down, x), DenseVector{down});
      row.hypergradient_fd = (l_up - l_down) / (2.0 * kSvmFdStep);
    });
    row.fd_relerr = relative_difference(row.hypergradient, row.hypergradient_fd);
    if (!std::isfinite(row.hypergradient)) throw NumericalError("svm-hpo: non-finite hypergradient");
    steps.push_back(row);
    lam -= outer_step(t) * row.hypergradient;
  }
  return steps;
}

inline ExperimentOutput exp_svm_hpo(const ExperimentConfig& cfg) {
  cfg.validate();
  ExperimentOutput out{CsvTable({"outer_step", "theta", "validation_loss", "hypergrad_fd_relerr"}), {}, {}, {}};
  const SvmInstance s = out.timings.run("data", [&] { return make_svm_instance(cfg.seed, cfg.dims); });
  const std::vector<SvmStep> steps = svm_hpo_run(cfg, s, out.timings);
  double worst_cross = 0.0;
  for (std::size_t t = 0; t < steps.size(); ++t) {
    const SvmStep& r = steps[t];
    out.table.add_row({static_cast<double>(t), std::exp(r.lambda), r.validation_loss, r.fd_relerr});
    worst_cross = std::max(worst_cross, relative_difference(r.hypergradient_cross, r.hypergradient));
  }
  out.metadata = {{"validation_samples", static_cast<double>(s.m_val)},
                  {"informative_fraction", kSvmInformativeFrac},
                  {"max_cross_condition_relerr", worst_cross}};
  return out;
}

// ===========================================================================
// Dataset distillation: one learned prototype per class
//
// x holds p×k logistic-regression weights and θ holds k×p prototypes, both
// column-major. Prototype j carries label j.
//   f(x, θ) = Σⱼ ℓ(θⱼx, j) + ε‖x‖²,   L(x) = (1/m) Σᵢ ℓ(Xᵢx, yᵢ),
// with ℓ(z, c) = logsumexp(z) − z_c.

inline constexpr double kDistillRidge = 1e-3;
inline constexpr double kDistillOuterStep = 0.01;
inline constexpr double kDistillMomentum = 0.9;
// Prototypes start at the scale of the data: near-zero prototypes make the
// inner loss flat, so x*(θ₀) is large and the first hypergradient overshoots.
inline constexpr double kDistillInitScale = 1.0;

struct DistillInstance {
  std::size_t p = 0, k = 0;
  DenseMatrix features;  // m × p
  std::vector<std::size_t> labels;
};

inline DistillInstance make_distill_instance(std::uint64_t seed, const Dims& dims) {
  ClassificationData d = gen_classification(seed, dims.m, dims.p, dims.k, 1.0, "train");
  return {dims.p, dims.k, std::move(d.features), std::move(d.labels)};
}

/// Multinomial logistic loss ℓ(z, label) and, when `grad` is non-null, ∂ℓ/∂z.
template <class S>
S logistic_loss(const BasicVector<S>& z, std::size_t label, BasicVector<S>* grad = nullptr) {
  double shift = -std::numeric_limits<double>::infinity();
  for (const auto& v : z) shift = std::max(shift, value_of(v));
  BasicVector<S> e = map(z, [shift](const S& v) { return S(exp(v - shift)); });
  const S total = sum(e);
  if (grad != nullptr) {
    *grad = e / total;
    (*grad)[label] -= 1.0;
  }
  return log(total) + shift - z[label];
}

/// Logits of `row` (length p) against p×k column-major weights.
template <class A, class S>
BasicVector<prod_t<A, S>> logits(const BasicVector<A>& row, const BasicVector<S>& w, std::size_t k) {
  const std::size_t p = row.size();
  BasicVector<prod_t<A, S>> z(k);
  for (std::size_t c = 0; c < k; ++c)
    for (std::size_t l = 0; l < p; ++l) z[c] += row[l] * w[l + p * c];
  return z;
}

template <class S>
BasicVector<S> prototype_row(const BasicVector<S>& th, std::size_t j, std::size_t k, std::size_t p) {
  BasicVector<S> row(p);
  for (std::size_t l = 0; l < p; ++l) row[l] = th[j + k * l];
  return row;
}

inline ScalarFn2 distill_inner_objective(std::size_t p, std::size_t k) {
  return make_scalar_fn(
      p * k, k * p,
      [p, k](const auto& x, const auto& th) {
        using S = detail::scalar_of<decltype(x)>;
        S total = kDistillRidge * squared_norm(x);
        for (std::size_t j = 0; j < k; ++j) total += logistic_loss(logits(prototype_row(th, j, k, p), x, k), j);
        return total;
      },
      [p, k](const auto& x, const auto& th) {
        using S = detail::scalar_of<decltype(x)>;
        BasicVector<S> g = (2.0 * kDistillRidge) * x;
        BasicVector<S> dz;
        for (std::size_t j = 0; j < k; ++j) {
          const BasicVector<S> row = prototype_row(th, j, k, p);
          logistic_loss(logits(row, x, k), j, &dz);
          for (std::size_t c = 0; c < k; ++c)
            for (std::size_t l = 0; l < p; ++l) g[l + p * c] += row[l] * dz[c];
        }
        return g;
      });
}

inline ScalarFn2 distill_outer_loss(const DistillInstance& inst) {
  const DenseMatrix features = inst.features;
  const std::vector<std::size_t> labels = inst.labels;
  const std::size_t k = inst.k;
  return make_scalar_fn(inst.p * k, 0, [features, labels, k](const auto& x, const auto&) {
    using S = detail::scalar_of<decltype(x)>;
    S total = 0.0;
    for (std::size_t i = 0; i < features.rows(); ++i)
      total += logistic_loss(logits(features.row(i), x, k), labels[i]);
    return total / static_cast<double>(features.rows());
  });
}

/// Heavy-ball descent (step 0.01, momentum 0.9) on the prototypes, started at
/// N(0, 1). The inner problem is solved by backtracking gradient descent
/// warm-started from the previous solution. Rows are outer steps 0..outer_iters.
inline ExperimentOutput exp_distill(const ExperimentConfig& cfg) {
  cfg.validate();
  ExperimentOutput out{CsvTable({"outer_step", "outer_loss"}), {}, {}, {}};
  const DistillInstance inst = out.timings.run("data", [&] { return make_distill_instance(cfg.seed, cfg.dims); });
  const std::size_t p = inst.p, k = inst.k;
  const ScalarFn2 f = distill_inner_objective(p, k);
  CounterRng init = CounterRng::stream(cfg.seed, "distill/prototypes");
  const DenseVector theta0 = init.normal_vector(k * p, kDistillInitScale);

  TraceOptions quiet;
  quiet.keep_every = 0;
  BilevelProblem prob;
  prob.solve_inner = [&](const DenseVector& th, const DenseVector& warm) {
    return out.timings.run("inner_solve",
                           [&] { return gradient_descent(f, th, warm, cfg.inner_iters, true, 1.0, quiet).x; });
  };
  prob.condition = stationary_condition(f);
  prob.outer_loss = distill_outer_loss(inst);
  OuterConfig ocfg;
  ocfg.step = kDistillOuterStep;
  ocfg.momentum = kDistillMomentum;
  ocfg.iterations = cfg.outer_iters;
  const OuterResult res = out.timings.run("outer", [&] { return outer_descent(prob, theta0, DenseVector(p * k), ocfg); });

  for (std::size_t t = 0; t < res.trace.loss.size(); ++t) out.table.add_row({static_cast<double>(t), res.trace.loss[t]});
  out.attachments.emplace_back("prototypes", matrix_table(DenseMatrix::reshape(res.theta, k, p)));
  out.metadata = {{"epsilon", kDistillRidge}, {"outer_step", kDistillOuterStep}, {"momentum", kDistillMomentum}};
  return out;
}

// ===========================================================================
// Lasso: derivative of the solution path in the log-regularization θ
//
// f(x) = ½‖Φx − b‖², g(x) = e^θ‖x‖₁, condition x = ST(x − η∇f(x), ηe^θ).

inline constexpr double kLassoFdStep = 1e-4;
inline constexpr double kLassoKrylovTol = 1e-12;

struct LassoInstance {
  DenseMatrix design;  // Φ, m×d
  DenseVector target;  // b
};

/// Φ has N(0, 1/m) entries; b = Φx₀ + 0.1·N(0, 1) with x₀ supported on the
/// first max(1, d/4) coordinates.
inline LassoInstance make_lasso_instance(std::uint64_t seed, std::size_t m, std::size_t d) {
  CounterRng design = CounterRng::stream(seed, "lasso/design");
  CounterRng truth = CounterRng::stream(seed, "lasso/truth");
  CounterRng noise = CounterRng::stream(seed, "lasso/noise");
  LassoInstance inst{design.normal_matrix(m, d, 1.0 / std::sqrt(static_cast<double>(m))), DenseVector()};
  DenseVector x0(d);
  for (std::size_t i = 0; i < std::max<std::size_t>(1, d / 4); ++i) x0[i] = truth.normal();
  inst.target = inst.design * x0 + noise.normal_vector(m, 0.1);
  return inst;
}

inline ScalarFn2 lasso_loss(const LassoInstance& inst) {
  const DenseMatrix phi = inst.design, gram = inst.design.transpose() * inst.design;
  const DenseVector b = inst.target, c = transpose_mul(inst.design, inst.target);
  return make_scalar_fn(
      phi.cols(), 1, [phi, b](const auto& x, const auto&) { return 0.5 * squared_norm(phi * x - b); },
      [gram, c](const auto& x, const auto&) { return gram * x - c; });
}

inline double lasso_step(const LassoInstance& inst) {
  return 1.0 / max_eigenvalue_psd(inst.design.transpose() * inst.design);
}

/// `points` values evenly spaced over [log λ_max − 4, log λ_max − 0.05],
/// λ_max = ‖Φᵀb‖_∞ being the smallest scale with x* = 0.
inline std::vector<double> lasso_theta_grid(const LassoInstance& inst, std::size_t points) {
  const double top = std::log(norm_inf(transpose_mul(inst.design, inst.target)));
  const double lo = top - 4.0, hi = top - 0.05;
  std::vector<double> grid;
  for (std::size_t i = 0; i < points; ++i) {
    grid.push_back(points == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1));
  }
  return grid;
}

/// FISTA from x0 with step 1/λ_max(ΦᵀΦ).
inline DenseVector lasso_solve(const LassoInstance& inst, double theta, const DenseVector& x0, std::size_t iters) {
  TraceOptions quiet;
  quiet.keep_every = 0;
  return proximal_gradient(lasso_loss(inst), prox::lasso_log_scale(inst.design.cols()), DenseVector{theta}, x0, iters,
                           lasso_step(inst), true, quiet)
      .x;
}

inline std::vector<std::size_t> support_of(const DenseVector& x) {
  std::vector<std::size_t> s;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (x[i] != 0.0) s.push_back(i);
  return s;
}

struct LassoRow {
  double theta = 0.0;
  std::size_t support_size = 0;
  DenseVector implicit;  // dx*/dθ from the prox-gradient fixed point
  DenseVector fd;        // central difference of re-solved solutions
  double relerr = 0.0;
};

/// One row per grid point whose support is the same at θ − h, θ and θ + h
/// (h = 1e-4); other points sit too close to a kink of the path and are skipped.
inline std::vector<LassoRow> lasso_sensitivity(const LassoInstance& inst, const std::vector<double>& grid,
                                               std::size_t iters, PhaseTimes& timings) {
  const std::size_t d = inst.design.cols();
  const RootProblem condition =
      to_root(proximal_gradient_fp(lasso_loss(inst), prox::lasso_log_scale(d), lasso_step(inst)));
  ImplicitConfig icfg;
  icfg.tol = kLassoKrylovTol;
  std::vector<LassoRow> rows;
  for (double theta : grid) {
    DenseVector x, up, down;
    timings.run("inner_solve", [&] {
      x = lasso_solve(inst, theta, DenseVector(d), iters);
      up = lasso_solve(inst, theta + kLassoFdStep, x, iters);
      down = lasso_solve(inst, theta - kLassoFdStep, x, iters);
    });
    const auto support = support_of(x);
    if (support != support_of(up) || support != support_of(down)) continue;
    LassoRow row;
    row.theta = theta;
    row.support_size = support.size();
    row.implicit = timings.run("implicit", [&] {
      return root_jvp(condition, x, DenseVector{theta}, DenseVector{1.0}, icfg).value;
    });
    row.fd = (1.0 / (2.0 * kLassoFdStep)) * (up - down);
    const double diff = norm(row.implicit - row.fd), scale = norm(row.fd);
    row.relerr = scale == 0.0 ? diff : diff / scale;
    rows.push_back(std::move(row));
  }
  return rows;
}

inline ExperimentOutput exp_lasso(const ExperimentConfig& cfg) {
  cfg.validate();
  ExperimentOutput out{
      CsvTable({"theta", "support_size", "dx_dtheta_implicit", "dx_dtheta_fd", "relerr"}), {}, {}, {}};
  const LassoInstance inst = out.timings.run("data", [&] { return make_lasso_instance(cfg.seed, cfg.dims.m, cfg.dims.p); });
  const std::vector<double> grid = lasso_theta_grid(inst, cfg.outer_iters);
  const std::vector<LassoRow> rows = lasso_sensitivity(inst, grid, cfg.inner_iters, out.timings);
  for (const LassoRow& r : rows) {
    out.table.add_row({r.theta, static_cast<double>(r.support_size), norm(r.implicit), norm(r.fd), r.relerr});
  }
  out.metadata = {{"grid_points", static_cast<double>(grid.size())},
                  {"skipped_points", static_cast<double>(grid.size() - rows.size())},
                  {"fd_step", kLassoFdStep}};
  return out;
}

// ===========================================================================

inline ExperimentOutput run_experiment(const ExperimentConfig& cfg) {
  switch (cfg.experiment) {
    case Experiment::RidgePrecision: return exp_ridge_precision(cfg);
    case Experiment::SvmHpo: return exp_svm_hpo(cfg);
    case Experiment::Distill: return exp_distill(cfg);
    case Experiment::Lasso: return exp_lasso(cfg);
  }
  throw ConfigError("unknown experiment");
}

}  // namespace idiff::bench
