#pragma once

/// \file operators.hpp
/// \brief Type-erased projection, prox, mirror-map and Bregman-projection
/// operators, ready to plug into fixed-point conditions and solvers.
///
/// Each operator receives the full outer parameter θ when its `dim_param`
/// is nonzero, and an empty vector otherwise.

#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "idiff/autodiff/dual.hpp"
#include "idiff/autodiff/poly_fn.hpp"
#include "idiff/errors.hpp"
#include "idiff/linalg/dense.hpp"
#include "idiff/operators/projections.hpp"
#include "idiff/operators/prox.hpp"

namespace idiff {

/// Euclidean projection onto C(θ).
struct ProjOperator {
  std::string set_name;
  std::size_t dim = 0;
  std::size_t dim_param = 0;
  PolyFn<BinaryVecSig> eval;

  template <class S>
  BasicVector<S> apply(const BasicVector<S>& y, const BasicVector<S>& param) const {
    detail::require_dims(y.size() == dim, set_name + " projection: input has wrong length");
    detail::require_dims(param.size() == dim_param, set_name + " projection: parameter has wrong length");
    return eval.at<S>()(y, param);
  }
  DenseVector operator()(const DenseVector& y) const { return apply(y, DenseVector(dim_param)); }
};

template <class Fn>
ProjOperator make_projection(std::string name, std::size_t dim, std::size_t dim_param, const Fn& fn) {
  return {std::move(name), dim, dim_param, make_poly<BinaryVecSig>(fn)};
}

/// prox_{ηg}(y, θ).
struct ProxOperator {
  std::string name;
  std::size_t dim = 0;
  std::size_t dim_param = 0;
  PolyFn<SteppedVecSig> eval;

  template <class S>
  BasicVector<S> apply(const BasicVector<S>& y, const BasicVector<S>& param, double step) const {
    detail::require_dims(y.size() == dim, name + " prox: input has wrong length");
    detail::require_dims(param.size() == dim_param, name + " prox: parameter has wrong length");
    if (!(step > 0.0)) throw DomainError(name + " prox: step must be positive");
    return eval.at<S>()(y, param, step);
  }
  DenseVector operator()(const DenseVector& y, double step) const { return apply(y, DenseVector(dim_param), step); }
};

template <class Fn>
ProxOperator make_prox(std::string name, std::size_t dim, std::size_t dim_param, const Fn& fn) {
  return {std::move(name), dim, dim_param, make_poly<SteppedVecSig>(fn)};
}

/// Mirror map ∇φ with inverse ∇φ*.
struct MirrorMap {
  std::string name;
  std::size_t dim = 0;
  PolyFn<UnaryVecSig> grad;
  PolyFn<UnaryVecSig> grad_conjugate;

  template <class S>
  BasicVector<S> to_dual(const BasicVector<S>& x) const {
    detail::require_dims(x.size() == dim, name + " mirror map: input has wrong length");
    return grad.at<S>()(x);
  }
  template <class S>
  BasicVector<S> to_primal(const BasicVector<S>& y) const {
    detail::require_dims(y.size() == dim, name + " mirror map: input has wrong length");
    return grad_conjugate.at<S>()(y);
  }
};

/// Bregman projection proj^φ_C(y, θ), taking a dual-space point y.
struct BregmanProjOperator {
  std::string name;
  std::size_t dim = 0;
  std::size_t dim_param = 0;
  PolyFn<BinaryVecSig> eval;

  template <class S>
  BasicVector<S> apply(const BasicVector<S>& y, const BasicVector<S>& param) const {
    detail::require_dims(y.size() == dim, name + " Bregman projection: input has wrong length");
    detail::require_dims(param.size() == dim_param, name + " Bregman projection: parameter has wrong length");
    return eval.at<S>()(y, param);
  }
  DenseVector operator()(const DenseVector& y) const { return apply(y, DenseVector(dim_param)); }
};

// ---------------------------------------------------------------------------
// Factories. `dim_param` lets an operator that ignores θ still be combined
// with an objective whose θ has that length.

namespace projection {

inline ProjOperator whole_space(std::size_t d, std::size_t dim_param = 0) {
  return make_projection("whole space", d, dim_param, [](const auto& y, const auto&) { return y; });
}
inline ProjOperator nonneg(std::size_t d, std::size_t dim_param = 0) {
  return make_projection("nonnegative orthant", d, dim_param,
                         [](const auto& y, const auto&) { return proj_nonneg(y); });
}
inline ProjOperator box(const DenseVector& lo, const DenseVector& hi, std::size_t dim_param = 0) {
  detail::require_dims(lo.size() == hi.size(), "box: bound size mismatch");
  for (std::size_t i = 0; i < lo.size(); ++i)
    if (lo[i] > hi[i]) throw DomainError("box: lower bound exceeds upper bound");
  return make_projection("box", lo.size(), dim_param, [lo, hi](const auto& y, const auto&) {
    return proj_box(y, lo, hi);
  });
}
inline ProjOperator simplex(std::size_t d, std::size_t dim_param = 0) {
  return make_projection("simplex", d, dim_param, [](const auto& y, const auto&) { return proj_simplex(y); });
}
/// Row-wise simplices of a column-major rows×cols matrix.
inline ProjOperator simplex_rows(std::size_t rows, std::size_t cols, std::size_t dim_param = 0) {
  return make_projection("row-wise simplex", rows * cols, dim_param, [rows, cols](const auto& y, const auto&) {
    return proj_simplex_rows(y, rows, cols);
  });
}
inline ProjOperator l1_ball(std::size_t d, double radius, std::size_t dim_param = 0) {
  detail::check_radius(radius);
  return make_projection("l1 ball", d, dim_param, [radius](const auto& y, const auto&) {
    return proj_l1_ball(y, radius);
  });
}
inline ProjOperator l2_ball(std::size_t d, double radius, std::size_t dim_param = 0) {
  detail::check_radius(radius);
  return make_projection("l2 ball", d, dim_param, [radius](const auto& y, const auto&) {
    return proj_l2_ball(y, radius);
  });
}
inline ProjOperator linf_ball(std::size_t d, double radius, std::size_t dim_param = 0) {
  detail::check_radius(radius);
  return make_projection("linf ball", d, dim_param, [radius](const auto& y, const auto&) {
    return proj_linf_ball(y, radius);
  });
}
inline ProjOperator affine(const DenseMatrix& a, const DenseVector& b, std::size_t dim_param = 0) {
  (void)LuFactorization(a * a.transpose());
  return make_projection("affine set", a.cols(), dim_param, [a, b](const auto& y, const auto&) {
    using S = typename std::decay_t<decltype(y)>::value_type;
    return BasicVector<S>(proj_affine(y, a, b));
  });
}
inline ProjOperator hyperplane(const DenseVector& a, double b, std::size_t dim_param = 0) {
  return make_projection("hyperplane", a.size(), dim_param, [a, b](const auto& y, const auto&) {
    return proj_hyperplane(y, a, b);
  });
}
inline ProjOperator halfspace(const DenseVector& a, double b, std::size_t dim_param = 0) {
  return make_projection("half-space", a.size(), dim_param, [a, b](const auto& y, const auto&) {
    return proj_halfspace(y, a, b);
  });
}
inline ProjOperator box_section(const DenseVector& lo, const DenseVector& hi, const DenseVector& w, double c,
                                std::size_t dim_param = 0) {
  return make_projection("box section", lo.size(), dim_param, [lo, hi, w, c](const auto& y, const auto&) {
    return proj_box_section(y, lo, hi, w, c);
  });
}

}  // namespace projection

namespace prox {

inline ProxOperator identity(std::size_t d, std::size_t dim_param = 0) {
  return make_prox("identity", d, dim_param, [](const auto& y, const auto&, double) { return y; });
}
/// prox of the set indicator: the projection, independent of the step.
inline ProxOperator from_projection(const ProjOperator& proj) {
  return make_prox("indicator of " + proj.set_name, proj.dim, proj.dim_param,
                   [proj](const auto& y, const auto& param, double) { return proj.apply(y, param); });
}
/// g = scale·‖x‖₁ with a fixed scale.
inline ProxOperator lasso(std::size_t d, double scale, std::size_t dim_param = 0) {
  detail::check_scale(scale, "lasso: scale must be nonnegative");
  return make_prox("lasso", d, dim_param, [scale](const auto& y, const auto&, double step) {
    return prox_lasso(y, step * scale);
  });
}
/// g = e^θ₀‖x‖₁ with the scale taken from the first parameter entry.
inline ProxOperator lasso_log_scale(std::size_t d, std::size_t dim_param = 1) {
  detail::require_dims(dim_param >= 1, "lasso_log_scale needs a parameter");
  return make_prox("lasso (log scale)", d, dim_param, [](const auto& y, const auto& param, double step) {
    return prox_lasso(y, step * exp(param[0]));
  });
}
/// g = l1‖x‖₁ + (l2/2)‖x‖².
inline ProxOperator elastic_net(std::size_t d, double l1, double l2, std::size_t dim_param = 0) {
  detail::check_scale(l1, "elastic_net: l1 must be nonnegative");
  detail::check_scale(l2, "elastic_net: l2 must be nonnegative");
  return make_prox("elastic net", d, dim_param, [l1, l2](const auto& y, const auto&, double step) {
    return prox_elastic_net(y, step * l1, step * l2);
  });
}
/// g = scale·Σ_blocks ‖x_blk‖₂.
inline ProxOperator group_lasso(std::vector<Block> blocks, double scale, std::size_t dim_param = 0) {
  detail::check_scale(scale, "group_lasso: scale must be nonnegative");
  std::size_t d = 0;
  for (const Block& b : blocks) d += b.length;
  detail::check_partition(blocks, d);
  return make_prox("group lasso", d, dim_param, [blocks, scale](const auto& y, const auto&, double step) {
    return prox_group_lasso(y, step * scale, blocks);
  });
}

}  // namespace prox

namespace mirror {

inline MirrorMap euclidean(std::size_t d) {
  auto id = [](const auto& x) { return x; };
  return {"euclidean", d, make_poly<UnaryVecSig>(id), make_poly<UnaryVecSig>(id)};
}

/// Coordinates below this are zero for the KL map: the tangents of log (1/x,
/// 1/x²) overflow under it.
inline const double kKlZeroThreshold = std::sqrt(std::numeric_limits<double>::min());

/// φ(x) = Σ xᵢ log xᵢ − xᵢ, so ∇φ = log and ∇φ* = exp. A coordinate below
/// kKlZeroThreshold maps to −∞ with zero tangent; a negative coordinate is a
/// domain error.
inline MirrorMap kl(std::size_t d) {
  auto to_dual = [](const auto& x) {
    using S = typename std::decay_t<decltype(x)>::value_type;
    return map(x, [](const S& v) {
      if (value_of(v) < 0.0) throw DomainError("KL mirror map: negative coordinate");
      if (value_of(v) < kKlZeroThreshold) return S(-std::numeric_limits<double>::infinity());
      return S(log(v));
    });
  };
  auto to_primal = [](const auto& y) {
    using S = typename std::decay_t<decltype(y)>::value_type;
    return map(y, [](const S& v) { return S(exp(v)); });
  };
  return {"kl", d, make_poly<UnaryVecSig>(to_dual), make_poly<UnaryVecSig>(to_primal)};
}

}  // namespace mirror

namespace bregman {

/// Euclidean geometry: the Bregman projection is the Euclidean projection.
inline BregmanProjOperator euclidean(const ProjOperator& proj) {
  return {"euclidean " + proj.set_name, proj.dim, proj.dim_param,
          make_poly<BinaryVecSig>([proj](const auto& y, const auto& param) { return proj.apply(y, param); })};
}
/// KL projection onto the simplex: softmax.
inline BregmanProjOperator kl_simplex(std::size_t d, std::size_t dim_param = 0) {
  return {"kl simplex", d, dim_param,
          make_poly<BinaryVecSig>([](const auto& y, const auto&) { return kl_proj_simplex(y); })};
}
/// Row-wise softmax of a column-major rows×cols matrix.
inline BregmanProjOperator kl_simplex_rows(std::size_t rows, std::size_t cols, std::size_t dim_param = 0) {
  return {"kl row-wise simplex", rows * cols, dim_param,
          make_poly<BinaryVecSig>([rows, cols](const auto& y, const auto&) {
            return kl_proj_simplex_rows(y, rows, cols);
          })};
}

}  // namespace bregman

}  // namespace idiff
