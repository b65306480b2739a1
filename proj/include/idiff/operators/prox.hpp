#pragma once

/// \file prox.hpp
/// \brief Closed-form proximity operators, generic over the scalar type.

#include <cstddef>
#include <utility>
#include <vector>

#include "idiff/autodiff/dual.hpp"
#include "idiff/errors.hpp"
#include "idiff/linalg/dense.hpp"
#include "idiff/operators/projections.hpp"

namespace idiff {

/// A contiguous coordinate range [start, start + length).
struct Block {
  std::size_t start = 0;
  std::size_t length = 0;
};

namespace detail {

template <class T>
void check_scale(const T& s, const char* what) {
  if (value_of(s) < 0.0) throw DomainError(what);
}

/// Blocks must tile [0, n) in order.
inline void check_partition(const std::vector<Block>& blocks, std::size_t n) {
  std::size_t at = 0;
  for (const Block& b : blocks) {
    if (b.start != at || b.length == 0) throw DimensionError("blocks must partition the coordinates in order");
    at += b.length;
  }
  if (at != n) throw DimensionError("blocks must cover every coordinate");
}

}  // namespace detail

/// Soft-thresholding ST(y, s)ᵢ = sign(yᵢ)·max(|yᵢ| − s, 0), the prox of s‖·‖₁.
template <class S, class T = double>
BasicVector<scalar_t<S, T>> prox_lasso(const BasicVector<S>& y, const T& scale) {
  using R = scalar_t<S, T>;
  detail::check_scale(scale, "prox_lasso: scale must be nonnegative");
  BasicVector<R> out(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    const R v = R(y[i]);
    const R s = R(scale);
    detail::note_kink_if_dual<R>(R(abs(v)) - s);
    if (value_of(v) > value_of(s)) out[i] = v - s;
    else if (value_of(v) < -value_of(s)) out[i] = v + s;
  }
  return out;
}

/// Prox of l1‖·‖₁ + (l2/2)‖·‖²: ST(y, l1)/(1 + l2).
template <class S, class T = double>
BasicVector<scalar_t<S, T>> prox_elastic_net(const BasicVector<S>& y, const T& l1, const T& l2) {
  using R = scalar_t<S, T>;
  detail::check_scale(l1, "prox_elastic_net: l1 must be nonnegative");
  detail::check_scale(l2, "prox_elastic_net: l2 must be nonnegative");
  return prox_lasso(y, l1) / (1.0 + R(l2));
}

/// Block soft-thresholding: each block becomes max(1 − s/‖y_blk‖, 0)·y_blk.
template <class S, class T = double>
BasicVector<scalar_t<S, T>> prox_group_lasso(const BasicVector<S>& y, const T& scale, const std::vector<Block>& blocks) {
  using R = scalar_t<S, T>;
  detail::check_scale(scale, "prox_group_lasso: scale must be nonnegative");
  detail::check_partition(blocks, y.size());
  BasicVector<R> out(y.size());
  for (const Block& b : blocks) {
    const BasicVector<S> part = y.segment(b.start, b.length);
    const R n = R(norm(part));
    detail::note_kink_if_dual<R>(n - R(scale));
    if (value_of(n) <= value_of(scale)) continue;
    out.set_segment(b.start, (1.0 - R(scale) / n) * part);
  }
  return out;
}

}  // namespace idiff
