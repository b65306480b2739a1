#pragma once

/// \file unrolled.hpp
/// \brief Forward-mode differentiation of an iterated update map, the
/// baseline that implicit differentiation is compared against.
///
/// The result is ∂x_t/∂θ, the derivative of the t-th iterate, not a
/// Jacobian estimate at x_t. x_0 does not depend on θ.

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "idiff/autodiff/diff_fn.hpp"
#include "idiff/errors.hpp"
#include "idiff/linalg/dense.hpp"

namespace idiff {

struct UnrolledPath {
  std::vector<DenseVector> iterates;   // x_0..x_T
  std::vector<DenseMatrix> jacobians;  // ∂x_t/∂θ for t = 0..T
};

/// Runs x_{t+1} = T(x_t, θ) once per θ coordinate with dual numbers seeded
/// along that coordinate, keeping every intermediate derivative.
inline UnrolledPath unrolled_jacobian_path(const DiffFn2& update, const DenseVector& theta, const DenseVector& x0,
                                           std::size_t steps) {
  detail::require_dims(update.dim_out == update.dim_x, "unrolled_jacobian: update must map R^d to R^d");
  detail::require_dims(x0.size() == update.dim_x && theta.size() == update.dim_theta,
                       "unrolled_jacobian: argument size mismatch");
  const std::size_t d = update.dim_x, n = update.dim_theta;
  UnrolledPath path;
  path.jacobians.assign(steps + 1, DenseMatrix(d, n));
  path.iterates.assign(1, x0);
  if (n == 0) {
    DenseVector x = x0;
    for (std::size_t t = 0; t < steps; ++t) path.iterates.push_back(x = update(x, theta));
    return path;
  }
  for (std::size_t j = 0; j < n; ++j) {
    const BasicVector<Dual1> th = make_dual(theta, DenseVector::unit(n, j));
    BasicVector<Dual1> x = promote<Dual1>(x0);
    for (std::size_t t = 0; t < steps; ++t) {
      x = update.eval<Dual1>(x, th);
      const DenseVector tangent = tangents_of(x);
      if (!all_finite(tangent) || !all_finite(values_of(x))) {
        throw NumericalError("unrolled_jacobian: non-finite value at iteration " + std::to_string(t + 1));
      }
      path.jacobians[t + 1].set_col(j, tangent);
      if (j == 0) path.iterates.push_back(values_of(x));
    }
  }
  return path;
}

/// ∂x_T/∂θ after `steps` iterations.
inline DenseMatrix unrolled_jacobian(const DiffFn2& update, const DenseVector& theta, const DenseVector& x0,
                                     std::size_t steps) {
  return unrolled_jacobian_path(update, theta, x0, steps).jacobians.back();
}

}  // namespace idiff
