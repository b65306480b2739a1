#pragma once

#include <cmath>
#include <functional>

#include "idiff/errors.hpp"

namespace idiff {

/// Root of a scalar function on [lo, hi] with g(lo)·g(hi) ≤ 0. Stops when
/// |g(mid)| ≤ tol or the interval is no wider than tol; an endpoint root is
/// returned immediately.
inline double bisection_root(const std::function<double(double)>& g, double lo, double hi,
                             double tol = 1e-12, int max_iter = 200) {
  if (!(lo <= hi)) throw DomainError("bisection_root: lo must not exceed hi");
  double g_lo = g(lo);
  const double g_hi = g(hi);
  if (g_lo == 0.0) return lo;
  if (g_hi == 0.0) return hi;
  if (!std::isfinite(g_lo) || !std::isfinite(g_hi) || (g_lo > 0.0) == (g_hi > 0.0)) {
    throw DomainError("bisection_root: bracket does not straddle a root");
  }
  double mid = 0.5 * (lo + hi);
  for (int it = 0; it < max_iter; ++it) {
    mid = 0.5 * (lo + hi);
    const double g_mid = g(mid);
    if (std::fabs(g_mid) <= tol || hi - lo <= tol) return mid;
    if ((g_mid > 0.0) == (g_lo > 0.0)) {
      lo = mid;
      g_lo = g_mid;
    } else {
      hi = mid;
    }
  }
  return mid;
}

}  // namespace idiff
