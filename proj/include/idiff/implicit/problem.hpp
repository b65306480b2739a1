#pragma once

#include <cstddef>
#include <utility>

#include "idiff/autodiff/diff_fn.hpp"
#include "idiff/errors.hpp"

namespace idiff {

/// Known structure of A = −∂₁F, used to pick a Krylov method.
enum class OperatorStructure {
  General,
  SymmetricPositive,  // A symmetric positive definite
  SymmetricNegative,  // A symmetric negative definite (e.g. F = ∇f)
};

/// Optimality mapping F: R^d × R^n -> R^d whose root is x*(θ).
struct RootProblem {
  DiffFn2 f_map;
  OperatorStructure structure = OperatorStructure::General;

  RootProblem() = default;
  explicit RootProblem(DiffFn2 f, OperatorStructure s = OperatorStructure::General)
      : f_map(std::move(f)), structure(s) {
    detail::require_dims(f_map.dim_out == f_map.dim_x, "RootProblem: F must map R^d to R^d");
  }

  [[nodiscard]] std::size_t dim_x() const { return f_map.dim_x; }
  [[nodiscard]] std::size_t dim_theta() const { return f_map.dim_theta; }
  [[nodiscard]] bool symmetric() const { return structure != OperatorStructure::General; }

  DenseVector residual(const DenseVector& x, const DenseVector& theta) const { return f_map(x, theta); }
};

/// Fixed-point mapping T with x*(θ) = T(x*(θ), θ). `structure` describes
/// A = I − ∂₁T of the residual T − x.
struct FixedPointProblem {
  DiffFn2 t_map;
  OperatorStructure structure = OperatorStructure::General;

  FixedPointProblem() = default;
  explicit FixedPointProblem(DiffFn2 t, OperatorStructure s = OperatorStructure::General)
      : t_map(std::move(t)), structure(s) {
    detail::require_dims(t_map.dim_out == t_map.dim_x, "FixedPointProblem: T must map R^d to R^d");
  }

  [[nodiscard]] std::size_t dim_x() const { return t_map.dim_x; }
  [[nodiscard]] std::size_t dim_theta() const { return t_map.dim_theta; }
};

/// F(x, θ) = T(x, θ) − x. User product closures on T carry over with
/// ∂₁F = ∂₁T − I and ∂₂F = ∂₂T.
inline RootProblem to_root(const FixedPointProblem& fp) {
  const DiffFn2& t = fp.t_map;
  DiffFn2 f;
  f.dim_x = t.dim_x;
  f.dim_theta = t.dim_theta;
  f.dim_out = t.dim_out;
  f.eval0 = [e = t.eval0](const DenseVector& x, const DenseVector& th) { return e(x, th) - x; };
  f.eval1 = [e = t.eval1](const BasicVector<Dual1>& x, const BasicVector<Dual1>& th) { return e(x, th) - x; };
  if (t.eval2) {
    f.eval2 = [e = t.eval2](const BasicVector<Dual2>& x, const BasicVector<Dual2>& th) { return e(x, th) - x; };
  }
  if (t.jvp_x) {
    f.jvp_x = [j = t.jvp_x](const DenseVector& x, const DenseVector& th, const DenseVector& v) {
      return j(x, th, v) - v;
    };
  }
  if (t.vjp_x) {
    f.vjp_x = [j = t.vjp_x](const DenseVector& x, const DenseVector& th, const DenseVector& w) {
      return j(x, th, w) - w;
    };
  }
  f.jvp_theta = t.jvp_theta;
  f.vjp_theta = t.vjp_theta;
  return RootProblem(std::move(f), fp.structure);
}

}  // namespace idiff
