#pragma once

/// \file conic.hpp
/// \brief Residual map of the homogeneous self-dual embedding of a conic
/// program, F(x, θ) = ((Θ − I)Π + I)x with Θ skew-symmetric.

#include <cmath>
#include <cstddef>
#include <numeric>
#include <utility>
#include <vector>

#include "idiff/autodiff/diff_fn.hpp"
#include "idiff/autodiff/dual.hpp"
#include "idiff/errors.hpp"
#include "idiff/implicit/problem.hpp"
#include "idiff/linalg/dense.hpp"

namespace idiff {

enum class ConeKind { Zero, Nonneg, Free };

struct ConeBlock {
  ConeKind kind = ConeKind::Free;
  std::size_t length = 0;
};

/// Ordered cone blocks; Π projects each block onto its cone.
struct ConeSpec {
  std::vector<ConeBlock> blocks;

  [[nodiscard]] std::size_t dim() const {
    return std::accumulate(blocks.begin(), blocks.end(), std::size_t{0},
                           [](std::size_t acc, const ConeBlock& b) { return acc + b.length; });
  }
};

inline constexpr double kSkewTol = 1e-9;

template <class S>
BasicVector<S> cone_projection(const ConeSpec& cones, const BasicVector<S>& x) {
  detail::require_dims(x.size() == cones.dim(), "cone_projection: length != cone dimension");
  BasicVector<S> out(x.size());
  std::size_t at = 0;
  for (const ConeBlock& b : cones.blocks) {
    for (std::size_t i = at; i < at + b.length; ++i) {
      switch (b.kind) {
        case ConeKind::Zero: out[i] = S(0.0); break;
        case ConeKind::Free: out[i] = x[i]; break;
        case ConeKind::Nonneg: out[i] = max(x[i], 0.0); break;
      }
    }
    at += b.length;
  }
  return out;
}

/// Throws DomainError unless ‖Θ + Θᵀ‖_F ≤ kSkewTol.
inline void check_skew(const DenseMatrix& m) {
  double acc = 0.0;
  for (std::size_t j = 0; j < m.cols(); ++j)
    for (std::size_t i = 0; i < m.rows(); ++i) acc += std::pow(m(i, j) + m(j, i), 2);
  if (std::sqrt(acc) > kSkewTol) throw DomainError("conic_residual: theta is not skew-symmetric");
}

/// θ is the column-major flattening of the N×N skew matrix Θ, N = cones.dim().
inline RootProblem conic_residual(const ConeSpec& cones) {
  const std::size_t n = cones.dim();
  detail::require_dims(n > 0, "conic_residual: empty cone specification");
  for (const ConeBlock& b : cones.blocks) detail::require_dims(b.length > 0, "conic_residual: empty cone block");
  return RootProblem(make_diff_fn(n, n * n, n, [cones, n](const auto& x, const auto& th) {
    using S = typename std::decay_t<decltype(x)>::value_type;
    const BasicMatrix<S> skew = BasicMatrix<S>::reshape(th, n, n);
    check_skew(DenseMatrix::reshape(values_of(th), n, n));
    const BasicVector<S> proj = cone_projection(cones, x);
    return skew * proj - proj + x;
  }));
}

}  // namespace idiff
