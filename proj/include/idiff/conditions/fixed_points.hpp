#pragma once

/// \file fixed_points.hpp
/// \brief Optimality mappings built from an objective and, optionally, a
/// prox, projection or mirror map.
///
/// Every constructor returns an immutable problem whose maps close over
/// copies of their inputs.

#include <algorithm>
#include <cstddef>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "idiff/autodiff/diff_fn.hpp"
#include "idiff/errors.hpp"
#include "idiff/implicit/problem.hpp"
#include "idiff/linalg/lu.hpp"
#include "idiff/operators/operators.hpp"

namespace idiff {

namespace detail {

inline void check_step(double step, const char* who) {
  if (!(step > 0.0)) throw DomainError(std::string(who) + ": step size must be positive");
}

/// Operators see θ only when they declare a parameter of the same length.
inline void check_operator_param(std::size_t op_param, std::size_t theta_dim, const std::string& who) {
  if (op_param != 0 && op_param != theta_dim) {
    throw DimensionError(who + ": operator parameter length must be 0 or match theta");
  }
}

template <class S>
BasicVector<S> operator_param(std::size_t op_param, const BasicVector<S>& theta) {
  return op_param == 0 ? BasicVector<S>() : theta;
}

template <class V>
using scalar_of = typename std::decay_t<V>::value_type;

}  // namespace detail

/// F(x, θ) = ∇ₓf(x, θ). A = −∇²ₓf, so the problem is tagged symmetric negative.
inline RootProblem stationary_condition(const ScalarFn2& f) {
  DiffFn2 map = gradient_map(f);
  map.jvp_x = [f](const DenseVector& x, const DenseVector& th, const DenseVector& v) { return hvp_x(f, x, th, v); };
  map.vjp_x = map.jvp_x;
  map.jvp_theta = [f](const DenseVector& x, const DenseVector& th, const DenseVector& w) {
    return cross_jvp(f, x, th, w);
  };
  return RootProblem(std::move(map), OperatorStructure::SymmetricNegative);
}

/// T(x, θ) = x − η∇ₓf(x, θ). The Jacobian estimate does not depend on η.
inline FixedPointProblem gradient_descent_fp(const ScalarFn2& f, double step) {
  detail::check_step(step, "gradient_descent_fp");
  DiffFn2 map = make_diff_fn(f.dim_x, f.dim_theta, f.dim_x, [f, step](const auto& x, const auto& th) {
    return x - step * gradient_at(f, x, th);
  });
  map.jvp_x = [f, step](const DenseVector& x, const DenseVector& th, const DenseVector& v) {
    return v - step * hvp_x(f, x, th, v);
  };
  map.vjp_x = map.jvp_x;
  return FixedPointProblem(std::move(map), OperatorStructure::SymmetricPositive);
}

/// T(x, θ) = prox_{ηg}(x − η∇ₓf(x, θ), θ).
inline FixedPointProblem proximal_gradient_fp(const ScalarFn2& f, const ProxOperator& prox, double step) {
  detail::check_step(step, "proximal_gradient_fp");
  detail::require_dims(prox.dim == f.dim_x, "proximal_gradient_fp: prox dimension must match x");
  detail::check_operator_param(prox.dim_param, f.dim_theta, "proximal_gradient_fp");
  return FixedPointProblem(make_diff_fn(f.dim_x, f.dim_theta, f.dim_x, [f, prox, step](const auto& x, const auto& th) {
    return prox.apply(x - step * gradient_at(f, x, th), detail::operator_param(prox.dim_param, th), step);
  }));
}

/// T(x, θ) = proj_C(x − η∇ₓf(x, θ), θ).
inline FixedPointProblem projected_gradient_fp(const ScalarFn2& f, const ProjOperator& proj, double step) {
  detail::check_step(step, "projected_gradient_fp");
  detail::require_dims(proj.dim == f.dim_x, "projected_gradient_fp: projection dimension must match x");
  detail::check_operator_param(proj.dim_param, f.dim_theta, "projected_gradient_fp");
  return FixedPointProblem(make_diff_fn(f.dim_x, f.dim_theta, f.dim_x, [f, proj, step](const auto& x, const auto& th) {
    return proj.apply(x - step * gradient_at(f, x, th), detail::operator_param(proj.dim_param, th));
  }));
}

/// T(x, θ) = proj^φ_C(∇φ(x) − η∇ₓf(x, θ), θ). Under the KL map x must be
/// nonnegative; a zero coordinate stays at zero.
inline FixedPointProblem mirror_descent_fp(const ScalarFn2& f, const MirrorMap& mirror,
                                           const BregmanProjOperator& bproj, double step) {
  detail::check_step(step, "mirror_descent_fp");
  detail::require_dims(mirror.dim == f.dim_x && bproj.dim == f.dim_x,
                       "mirror_descent_fp: mirror map and projection dimensions must match x");
  detail::check_operator_param(bproj.dim_param, f.dim_theta, "mirror_descent_fp");
  return FixedPointProblem(
      make_diff_fn(f.dim_x, f.dim_theta, f.dim_x, [f, mirror, bproj, step](const auto& x, const auto& th) {
        return bproj.apply(mirror.to_dual(x) - step * gradient_at(f, x, th),
                           detail::operator_param(bproj.dim_param, th));
      }));
}

/// T(x, θ) = x − η[∂₁G(x̄, θ̄)]⁻¹G(x, θ), where the Jacobian is evaluated at
/// the primal values x̄, θ̄ and LU-factored once per evaluation. Freezing it is
/// exact at a root of G, where A = ηI and B = −η[∂₁G]⁻¹∂₂G.
inline FixedPointProblem newton_fp(const DiffFn2& root_map, double step) {
  detail::check_step(step, "newton_fp");
  detail::require_dims(root_map.dim_out == root_map.dim_x, "newton_fp: G must map R^d to R^d");
  DiffFn2 map = make_diff_fn(root_map.dim_x, root_map.dim_theta, root_map.dim_x,
                             [g = root_map, step](const auto& x, const auto& th) {
                               using S = detail::scalar_of<decltype(x)>;
                               const LuFactorization lu(jacobian_x(g, values_of(x), values_of(th)));
                               return x - step * lu.solve(g.template eval<S>(x, th));
                             });
  map.jvp_x = [step](const DenseVector&, const DenseVector&, const DenseVector& v) { return (1.0 - step) * v; };
  map.vjp_x = map.jvp_x;
  return FixedPointProblem(std::move(map), OperatorStructure::SymmetricPositive);
}

/// One block of a block-separable prox-gradient map.
struct ProxBlock {
  Block range;
  ProxOperator prox;
  double step = 1.0;
};

namespace detail {

/// Blocks sorted by start after checking that they partition [0, dim_x).
inline std::vector<ProxBlock> sorted_blocks(const ScalarFn2& f, std::vector<ProxBlock> blocks) {
  std::sort(blocks.begin(), blocks.end(),
            [](const ProxBlock& a, const ProxBlock& b) { return a.range.start < b.range.start; });
  std::vector<Block> ranges;
  for (const ProxBlock& b : blocks) {
    check_step(b.step, "block prox");
    require_dims(b.prox.dim == b.range.length, "block prox: prox dimension must match its block");
    check_operator_param(b.prox.dim_param, f.dim_theta, "block prox");
    ranges.push_back(b.range);
  }
  check_partition(ranges, f.dim_x);
  return blocks;
}

}  // namespace detail

/// [T(x, θ)]ᵢ = prox_{ηᵢgᵢ}(xᵢ − ηᵢ[∇ₓf(x, θ)]ᵢ, θ) over a partition of the coordinates.
inline FixedPointProblem block_prox_fp(const ScalarFn2& f, std::vector<ProxBlock> blocks) {
  blocks = detail::sorted_blocks(f, std::move(blocks));
  return FixedPointProblem(make_diff_fn(f.dim_x, f.dim_theta, f.dim_x, [f, blocks](const auto& x, const auto& th) {
    using S = detail::scalar_of<decltype(x)>;
    const BasicVector<S> grad = gradient_at(f, x, th);
    BasicVector<S> out(x.size());
    for (const ProxBlock& b : blocks) {
      const std::size_t at = b.range.start, len = b.range.length;
      const BasicVector<S> y = x.segment(at, len) - b.step * grad.segment(at, len);
      out.set_segment(at, b.prox.apply(y, detail::operator_param(b.prox.dim_param, th), b.step));
    }
    return out;
  }));
}

}  // namespace idiff
