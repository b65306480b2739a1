#pragma once

/// \file diff_fn.hpp
/// \brief Differentiable two-argument functions F(x, θ) and f(x, θ).
///
/// User code supplies generic callables, e.g.
///
/// \code
///   auto F = idiff::make_diff_fn(d, n, d, [](const auto& x, const auto& theta) {
///     return x - cwise_mul(theta, theta);
///   });
/// \endcode
///
/// The callable is instantiated once per scalar type (double and nested
/// duals), which is how JVPs, gradients and Hessian-vector products are
/// obtained without a reverse tape.

#include <cstddef>
#include <functional>
#include <type_traits>
#include <utility>

#include "idiff/autodiff/dual.hpp"
#include "idiff/errors.hpp"
#include "idiff/linalg/dense.hpp"

namespace idiff {

template <class S>
using VectorFn = std::function<BasicVector<S>(const BasicVector<S>&, const BasicVector<S>&)>;
template <class S>
using ScalarFn = std::function<S(const BasicVector<S>&, const BasicVector<S>&)>;

/// Optional hand-written derivative closure: (x, θ, direction) -> product.
using ProductFn = std::function<DenseVector(const DenseVector&, const DenseVector&, const DenseVector&)>;

/// Vector-valued F: R^dim_x × R^dim_theta -> R^dim_out.
struct DiffFn2 {
  std::size_t dim_x = 0;
  std::size_t dim_theta = 0;
  std::size_t dim_out = 0;

  VectorFn<double> eval0;
  VectorFn<Dual1> eval1;
  VectorFn<Dual2> eval2;  // may be empty for composed maps

  // User-supplied products; used instead of dual arithmetic when present.
  ProductFn jvp_x;
  ProductFn jvp_theta;
  ProductFn vjp_x;
  ProductFn vjp_theta;

  template <class S>
  [[nodiscard]] bool supports() const {
    if constexpr (std::is_same_v<S, double>) return static_cast<bool>(eval0);
    else if constexpr (std::is_same_v<S, Dual1>) return static_cast<bool>(eval1);
    else if constexpr (std::is_same_v<S, Dual2>) return static_cast<bool>(eval2);
    else return false;
  }

  template <class S>
  BasicVector<S> eval(const BasicVector<S>& x, const BasicVector<S>& theta) const {
    detail::require_dims(x.size() == dim_x, "DiffFn2: x has wrong length");
    detail::require_dims(theta.size() == dim_theta, "DiffFn2: theta has wrong length");
    BasicVector<S> out = [&] {
      if constexpr (std::is_same_v<S, double>) return eval0(x, theta);
      else if constexpr (std::is_same_v<S, Dual1>) return eval1(x, theta);
      else {
        static_assert(std::is_same_v<S, Dual2>, "DiffFn2 evaluates up to second-order duals");
        if (!eval2) throw Error("DiffFn2: no second-order evaluation available for this map");
        return eval2(x, theta);
      }
    }();
    detail::require_dims(out.size() == dim_out, "DiffFn2: output has wrong length");
    return out;
  }

  DenseVector operator()(const DenseVector& x, const DenseVector& theta) const {
    return eval<double>(x, theta);
  }
};

/// Builds a DiffFn2 from a generic callable (instantiated at double, Dual1, Dual2).
template <class Fn>
DiffFn2 make_diff_fn(std::size_t dim_x, std::size_t dim_theta, std::size_t dim_out, Fn fn) {
  detail::require_dims(dim_x > 0 && dim_out > 0, "make_diff_fn: dimensions must be positive");
  DiffFn2 out;
  out.dim_x = dim_x;
  out.dim_theta = dim_theta;
  out.dim_out = dim_out;
  out.eval0 = [fn](const DenseVector& x, const DenseVector& t) { return BasicVector<double>(fn(x, t)); };
  out.eval1 = [fn](const BasicVector<Dual1>& x, const BasicVector<Dual1>& t) {
    return BasicVector<Dual1>(fn(x, t));
  };
  out.eval2 = [fn](const BasicVector<Dual2>& x, const BasicVector<Dual2>& t) {
    return BasicVector<Dual2>(fn(x, t));
  };
  return out;
}

/// Scalar-valued f: R^dim_x × R^dim_theta -> R, with an optional closed-form
/// gradient in x. The gradient closure, when given, must itself be generic so
/// that Hessian products still come from dual arithmetic.
struct ScalarFn2 {
  std::size_t dim_x = 0;
  std::size_t dim_theta = 0;

  ScalarFn<double> eval0;
  ScalarFn<Dual1> eval1;
  ScalarFn<Dual2> eval2;
  ScalarFn<Dual3> eval3;

  VectorFn<double> grad0;
  VectorFn<Dual1> grad1;
  VectorFn<Dual2> grad2;

  [[nodiscard]] bool has_gradient() const { return static_cast<bool>(grad0); }

  template <class S>
  S eval(const BasicVector<S>& x, const BasicVector<S>& theta) const {
    detail::require_dims(x.size() == dim_x, "ScalarFn2: x has wrong length");
    detail::require_dims(theta.size() == dim_theta, "ScalarFn2: theta has wrong length");
    if constexpr (std::is_same_v<S, double>) return eval0(x, theta);
    else if constexpr (std::is_same_v<S, Dual1>) return eval1(x, theta);
    else if constexpr (std::is_same_v<S, Dual2>) return eval2(x, theta);
    else {
      static_assert(std::is_same_v<S, Dual3>, "ScalarFn2 evaluates up to third-order duals");
      return eval3(x, theta);
    }
  }

  double operator()(const DenseVector& x, const DenseVector& theta) const {
    return eval<double>(x, theta);
  }
};

template <class Fn>
ScalarFn2 make_scalar_fn(std::size_t dim_x, std::size_t dim_theta, Fn fn) {
  detail::require_dims(dim_x > 0, "make_scalar_fn: dim_x must be positive");
  ScalarFn2 out;
  out.dim_x = dim_x;
  out.dim_theta = dim_theta;
  out.eval0 = [fn](const BasicVector<double>& x, const BasicVector<double>& t) { return double(fn(x, t)); };
  out.eval1 = [fn](const BasicVector<Dual1>& x, const BasicVector<Dual1>& t) { return Dual1(fn(x, t)); };
  out.eval2 = [fn](const BasicVector<Dual2>& x, const BasicVector<Dual2>& t) { return Dual2(fn(x, t)); };
  out.eval3 = [fn](const BasicVector<Dual3>& x, const BasicVector<Dual3>& t) { return Dual3(fn(x, t)); };
  return out;
}

/// As above with a generic closed-form gradient in x.
template <class Fn, class Grad>
ScalarFn2 make_scalar_fn(std::size_t dim_x, std::size_t dim_theta, Fn fn, Grad grad) {
  ScalarFn2 out = make_scalar_fn(dim_x, dim_theta, std::move(fn));
  out.grad0 = [grad](const BasicVector<double>& x, const BasicVector<double>& t) {
    return BasicVector<double>(grad(x, t));
  };
  out.grad1 = [grad](const BasicVector<Dual1>& x, const BasicVector<Dual1>& t) {
    return BasicVector<Dual1>(grad(x, t));
  };
  out.grad2 = [grad](const BasicVector<Dual2>& x, const BasicVector<Dual2>& t) {
    return BasicVector<Dual2>(grad(x, t));
  };
  return out;
}

// ---------------------------------------------------------------------------
// Seeding helpers

namespace detail {

/// Lifts v into Dual<S> with tangent `dir` (or zero tangent when dir is empty).
template <class S>
BasicVector<Dual<S>> seed(const BasicVector<S>& v, const DenseVector* dir = nullptr,
                          std::size_t unit = static_cast<std::size_t>(-1)) {
  BasicVector<Dual<S>> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    double t = 0.0;
    if (dir != nullptr) t = (*dir)[i];
    else if (i == unit) t = 1.0;
    if constexpr (std::is_same_v<S, double>) out[i] = Dual<S>(v[i], t);
    else out[i] = Dual<S>(v[i], S(t));
  }
  return out;
}

template <class S>
BasicVector<S> tangent_part(const BasicVector<Dual<S>>& v) {
  BasicVector<S> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i].eps;
  return out;
}

}  // namespace detail

/// ∇ₓf evaluated at scalar level S. Uses the closed-form gradient when
/// available, otherwise dim_x forward passes at level Dual<S>.
template <class S>
BasicVector<S> gradient_at(const ScalarFn2& f, const BasicVector<S>& x, const BasicVector<S>& theta) {
  detail::require_dims(x.size() == f.dim_x && theta.size() == f.dim_theta,
                       "gradient: argument size mismatch");
  if (f.has_gradient()) {
    if constexpr (std::is_same_v<S, double>) return f.grad0(x, theta);
    else if constexpr (std::is_same_v<S, Dual1>) return f.grad1(x, theta);
    else if constexpr (std::is_same_v<S, Dual2>) return f.grad2(x, theta);
  }
  static_assert(std::is_same_v<S, double> || std::is_same_v<S, Dual1> || std::is_same_v<S, Dual2>,
                "gradient available up to Dual2");
  BasicVector<S> g(x.size());
  const auto th = detail::seed(theta);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const auto xs = detail::seed(x, nullptr, i);
    g[i] = f.eval<Dual<S>>(xs, th).eps;
  }
  return g;
}

/// Wraps ∇ₓf as a vector-valued map F(x, θ) = ∇ₓf(x, θ).
inline DiffFn2 gradient_map(const ScalarFn2& f) {
  DiffFn2 out;
  out.dim_x = f.dim_x;
  out.dim_theta = f.dim_theta;
  out.dim_out = f.dim_x;
  out.eval0 = [f](const BasicVector<double>& x, const BasicVector<double>& t) { return gradient_at(f, x, t); };
  out.eval1 = [f](const BasicVector<Dual1>& x, const BasicVector<Dual1>& t) { return gradient_at(f, x, t); };
  out.eval2 = [f](const BasicVector<Dual2>& x, const BasicVector<Dual2>& t) { return gradient_at(f, x, t); };
  return out;
}

// ---------------------------------------------------------------------------
// Products

/// ∂₁F(x, θ)·v.
inline DenseVector jvp_x(const DiffFn2& fn, const DenseVector& x, const DenseVector& theta,
                         const DenseVector& v) {
  detail::require_dims(v.size() == fn.dim_x, "jvp_x: direction has wrong length");
  if (fn.jvp_x) return fn.jvp_x(x, theta, v);
  return tangents_of(fn.eval<Dual1>(make_dual(x, v), promote<Dual1>(theta)));
}

/// ∂₂F(x, θ)·w.
inline DenseVector jvp_theta(const DiffFn2& fn, const DenseVector& x, const DenseVector& theta,
                             const DenseVector& w) {
  detail::require_dims(w.size() == fn.dim_theta, "jvp_theta: direction has wrong length");
  if (fn.jvp_theta) return fn.jvp_theta(x, theta, w);
  return tangents_of(fn.eval<Dual1>(promote<Dual1>(x), make_dual(theta, w)));
}

/// Dense ∂₁F(x, θ), one JVP per column.
inline DenseMatrix jacobian_x(const DiffFn2& fn, const DenseVector& x, const DenseVector& theta) {
  DenseMatrix jac(fn.dim_out, fn.dim_x);
  for (std::size_t j = 0; j < fn.dim_x; ++j)
    jac.set_col(j, jvp_x(fn, x, theta, DenseVector::unit(fn.dim_x, j)));
  return jac;
}

/// Dense ∂₂F(x, θ), one JVP per column.
inline DenseMatrix jacobian_theta(const DiffFn2& fn, const DenseVector& x, const DenseVector& theta) {
  DenseMatrix jac(fn.dim_out, fn.dim_theta);
  for (std::size_t j = 0; j < fn.dim_theta; ++j)
    jac.set_col(j, jvp_theta(fn, x, theta, DenseVector::unit(fn.dim_theta, j)));
  return jac;
}

/// [∂₁F(x, θ)]ᵀ·w. Without a user closure the Jacobian is materialized.
inline DenseVector vjp_x(const DiffFn2& fn, const DenseVector& x, const DenseVector& theta,
                         const DenseVector& w) {
  detail::require_dims(w.size() == fn.dim_out, "vjp_x: cotangent has wrong length");
  if (fn.vjp_x) return fn.vjp_x(x, theta, w);
  return transpose_mul(jacobian_x(fn, x, theta), w);
}

/// [∂₂F(x, θ)]ᵀ·w.
inline DenseVector vjp_theta(const DiffFn2& fn, const DenseVector& x, const DenseVector& theta,
                             const DenseVector& w) {
  detail::require_dims(w.size() == fn.dim_out, "vjp_theta: cotangent has wrong length");
  if (fn.vjp_theta) return fn.vjp_theta(x, theta, w);
  if (fn.dim_theta == 0) return DenseVector();
  return transpose_mul(jacobian_theta(fn, x, theta), w);
}

/// ∇ₓf(x, θ).
inline DenseVector grad_x(const ScalarFn2& f, const DenseVector& x, const DenseVector& theta) {
  return gradient_at<double>(f, x, theta);
}

/// ∇²ₓf(x, θ)·v.
inline DenseVector hvp_x(const ScalarFn2& f, const DenseVector& x, const DenseVector& theta,
                         const DenseVector& v) {
  detail::require_dims(v.size() == f.dim_x, "hvp_x: direction has wrong length");
  return tangents_of(gradient_at<Dual1>(f, make_dual(x, v), promote<Dual1>(theta)));
}

/// ∂_θ∇ₓf(x, θ)·w.
inline DenseVector cross_jvp(const ScalarFn2& f, const DenseVector& x, const DenseVector& theta,
                             const DenseVector& w) {
  detail::require_dims(w.size() == f.dim_theta, "cross_jvp: direction has wrong length");
  return tangents_of(gradient_at<Dual1>(f, promote<Dual1>(x), make_dual(theta, w)));
}

/// ∇_θf(x, θ), one forward pass per θ coordinate.
inline DenseVector grad_theta(const ScalarFn2& f, const DenseVector& x, const DenseVector& theta) {
  DenseVector g(theta.size());
  const auto xs = promote<Dual1>(x);
  for (std::size_t j = 0; j < theta.size(); ++j)
    g[j] = f.eval<Dual1>(xs, make_dual(theta, DenseVector::unit(theta.size(), j))).eps;
  return g;
}

// ---------------------------------------------------------------------------

/// Central-difference Jacobian; column j is (fn(at + h eⱼ) − fn(at − h eⱼ)) / 2h.
template <class Fn>
DenseMatrix finite_diff_jacobian(Fn&& fn, const DenseVector& at, double h = 1e-6) {
  if (!(h > 0.0)) throw DomainError("finite_diff_jacobian: step must be positive");
  DenseMatrix jac;
  for (std::size_t j = 0; j < at.size(); ++j) {
    DenseVector plus = at, minus = at;
    plus[j] += h;
    minus[j] -= h;
    DenseVector col = (1.0 / (2.0 * h)) * (DenseVector(fn(plus)) - DenseVector(fn(minus)));
    if (j == 0) jac = DenseMatrix(col.size(), at.size());
    jac.set_col(j, col);
  }
  return jac;
}

/// Largest relative disagreement between the user-supplied product closures
/// of `fn` and dual-number JVPs, probed along the coordinate directions.
inline double validate_closures(const DiffFn2& fn, const DenseVector& x, const DenseVector& theta) {
  DiffFn2 plain = fn;
  plain.jvp_x = plain.jvp_theta = plain.vjp_x = plain.vjp_theta = nullptr;
  double worst = 0.0;
  auto rel = [](const DenseVector& a, const DenseVector& b) {
    return norm(a - b) / std::max(1.0, norm(b));
  };
  const DenseMatrix jx = jacobian_x(plain, x, theta);
  const DenseMatrix jt = jacobian_theta(plain, x, theta);
  for (std::size_t j = 0; j < fn.dim_x; ++j) {
    const DenseVector e = DenseVector::unit(fn.dim_x, j);
    if (fn.jvp_x) worst = std::max(worst, rel(fn.jvp_x(x, theta, e), jx.col(j)));
  }
  for (std::size_t j = 0; j < fn.dim_theta; ++j) {
    const DenseVector e = DenseVector::unit(fn.dim_theta, j);
    if (fn.jvp_theta) worst = std::max(worst, rel(fn.jvp_theta(x, theta, e), jt.col(j)));
  }
  for (std::size_t i = 0; i < fn.dim_out; ++i) {
    const DenseVector e = DenseVector::unit(fn.dim_out, i);
    if (fn.vjp_x) worst = std::max(worst, rel(fn.vjp_x(x, theta, e), jx.row(i)));
    if (fn.vjp_theta && fn.dim_theta > 0) worst = std::max(worst, rel(fn.vjp_theta(x, theta, e), jt.row(i)));
  }
  return worst;
}

inline constexpr double kClosureValidationTol = 1e-8;

}  // namespace idiff
