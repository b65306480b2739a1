#pragma once

/// \file oracle.hpp
/// \brief Reference projections for tests: exhaustive active-set enumeration
/// over small polyhedra and multiplier bisection for the ℓ2 ball.

#include <cmath>
#include <cstddef>
#include <variant>
#include <vector>

#include "idiff/errors.hpp"
#include "idiff/linalg/dense.hpp"
#include "idiff/linalg/lu.hpp"
#include "idiff/solvers/bisection.hpp"

namespace idiff {

/// {x : ineq_a x ≤ ineq_b, eq_a x = eq_b}. Either block may have zero rows.
struct PolyhedralSet {
  std::size_t dim = 0;
  DenseMatrix ineq_a;
  DenseVector ineq_b;
  DenseMatrix eq_a;
  DenseVector eq_b;
};

struct EuclideanBall {
  std::size_t dim = 0;
  double radius = 1.0;
};

using OracleSet = std::variant<PolyhedralSet, EuclideanBall>;

namespace oracle_sets {

namespace detail {
inline PolyhedralSet with_rows(std::size_t d, const std::vector<DenseVector>& a, const std::vector<double>& b,
                               const std::vector<DenseVector>& e = {}, const std::vector<double>& f = {}) {
  PolyhedralSet s;
  s.dim = d;
  s.ineq_a = DenseMatrix(a.size(), d);
  s.ineq_b = DenseVector(b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    s.ineq_a.set_row(i, a[i]);
    s.ineq_b[i] = b[i];
  }
  s.eq_a = DenseMatrix(e.size(), d);
  s.eq_b = DenseVector(f.size());
  for (std::size_t i = 0; i < e.size(); ++i) {
    s.eq_a.set_row(i, e[i]);
    s.eq_b[i] = f[i];
  }
  return s;
}
}  // namespace detail

inline PolyhedralSet nonneg(std::size_t d) {
  std::vector<DenseVector> a;
  for (std::size_t i = 0; i < d; ++i) a.push_back(-1.0 * DenseVector::unit(d, i));
  return detail::with_rows(d, a, std::vector<double>(d, 0.0));
}
inline PolyhedralSet box(const DenseVector& lo, const DenseVector& hi) {
  const std::size_t d = lo.size();
  std::vector<DenseVector> a;
  std::vector<double> b;
  for (std::size_t i = 0; i < d; ++i) {
    a.push_back(DenseVector::unit(d, i));
    b.push_back(hi[i]);
    a.push_back(-1.0 * DenseVector::unit(d, i));
    b.push_back(-lo[i]);
  }
  return detail::with_rows(d, a, b);
}
inline PolyhedralSet simplex(std::size_t d) {
  PolyhedralSet s = nonneg(d);
  return detail::with_rows(d, [&] {
    std::vector<DenseVector> a;
    for (std::size_t i = 0; i < d; ++i) a.push_back(s.ineq_a.row(i));
    return a;
  }(), std::vector<double>(d, 0.0), {DenseVector::ones(d)}, {1.0});
}
/// The ℓ1 ball as the 2^d half-spaces sᵀx ≤ r, s ∈ {±1}^d.
inline PolyhedralSet l1_ball(std::size_t d, double radius) {
  std::vector<DenseVector> a;
  for (std::size_t mask = 0; mask < (std::size_t{1} << d); ++mask) {
    DenseVector s(d);
    for (std::size_t i = 0; i < d; ++i) s[i] = (mask >> i) & 1U ? -1.0 : 1.0;
    a.push_back(s);
  }
  return detail::with_rows(d, a, std::vector<double>(a.size(), radius));
}
inline PolyhedralSet linf_ball(std::size_t d, double radius) {
  return box(DenseVector(d, -radius), DenseVector(d, radius));
}
inline PolyhedralSet halfspace(const DenseVector& a, double b) { return detail::with_rows(a.size(), {a}, {b}); }
inline PolyhedralSet hyperplane(const DenseVector& a, double b) {
  return detail::with_rows(a.size(), {}, {}, {a}, {b});
}
inline PolyhedralSet affine(const DenseMatrix& a, const DenseVector& b) {
  std::vector<DenseVector> rows;
  std::vector<double> rhs;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    rows.push_back(a.row(i));
    rhs.push_back(b[i]);
  }
  return detail::with_rows(a.cols(), {}, {}, rows, rhs);
}
inline PolyhedralSet box_section(const DenseVector& lo, const DenseVector& hi, const DenseVector& w, double c) {
  PolyhedralSet s = box(lo, hi);
  s.eq_a = DenseMatrix(1, w.size());
  s.eq_a.set_row(0, w);
  s.eq_b = DenseVector{c};
  return s;
}
inline EuclideanBall l2_ball(std::size_t d, double radius) { return {d, radius}; }

}  // namespace oracle_sets

namespace detail {

/// Projection onto {x : C x = rhs}; false when C Cᵀ is singular.
inline bool project_onto_equalities(const DenseMatrix& c, const DenseVector& rhs, const DenseVector& y,
                                    DenseVector& x, DenseVector& multipliers) {
  if (c.rows() == 0) {
    x = y;
    multipliers = DenseVector();
    return true;
  }
  try {
    const LuFactorization gram(c * c.transpose());
    multipliers = gram.solve(DenseVector(c * y - rhs));
  } catch (const SingularMatrixError&) {
    return false;
  }
  x = y - transpose_mul(c, multipliers);
  return true;
}

inline DenseVector oracle_polyhedral(const PolyhedralSet& set, const DenseVector& y) {
  const std::size_t d = set.dim, r = set.ineq_a.rows(), q = set.eq_a.rows();
  require_dims(y.size() == d, "proj_oracle: point has wrong length");
  if (r > 20) throw DimensionError("proj_oracle: too many inequality facets to enumerate");
  constexpr double kFeasTol = 1e-10, kMultTol = 1e-12;

  std::vector<std::size_t> active;
  DenseVector x, mult;
  auto try_subset = [&]() {
    DenseMatrix c(q + active.size(), d);
    DenseVector rhs(q + active.size());
    for (std::size_t i = 0; i < q; ++i) {
      c.set_row(i, set.eq_a.row(i));
      rhs[i] = set.eq_b[i];
    }
    for (std::size_t k = 0; k < active.size(); ++k) {
      c.set_row(q + k, set.ineq_a.row(active[k]));
      rhs[q + k] = set.ineq_b[active[k]];
    }
    if (!project_onto_equalities(c, rhs, y, x, mult)) return false;
    for (std::size_t k = 0; k < active.size(); ++k)
      if (mult[q + k] < -kMultTol) return false;
    for (std::size_t i = 0; i < r; ++i) {
      const double slack = dot(set.ineq_a.row(i), x) - set.ineq_b[i];
      if (slack > kFeasTol * std::max(1.0, std::fabs(set.ineq_b[i]))) return false;
    }
    return true;
  };

  // Subsets in order of size; the first KKT point found is the projection.
  const std::size_t max_size = std::min(r, d);
  for (std::size_t size = 0; size <= max_size; ++size) {
    active.assign(size, 0);
    for (std::size_t k = 0; k < size; ++k) active[k] = k;
    while (true) {
      if (try_subset()) return x;
      // Next combination in lexicographic order.
      std::size_t k = size;
      while (k > 0 && active[k - 1] == r - size + k - 1) --k;
      if (k == 0) break;
      ++active[k - 1];
      for (std::size_t j = k; j < size; ++j) active[j] = active[j - 1] + 1;
    }
  }
  throw NumericalError("proj_oracle: no KKT point found (empty set?)");
}

inline DenseVector oracle_ball(const EuclideanBall& ball, const DenseVector& y) {
  require_dims(y.size() == ball.dim, "proj_oracle: point has wrong length");
  const double n = norm(y);
  if (n <= ball.radius) return y;
  // x(μ) = y/(1+μ); find μ ≥ 0 with ‖x(μ)‖ = radius.
  const double mu = bisection_root([&](double m) { return n / (1.0 + m) - ball.radius; }, 0.0, n / ball.radius,
                                   1e-15, 400);
  return (1.0 / (1.0 + mu)) * y;
}

}  // namespace detail

/// Reference Euclidean projection of y onto `set`.
inline DenseVector proj_oracle(const OracleSet& set, const DenseVector& y) {
  return std::visit(
      [&](const auto& s) -> DenseVector {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, PolyhedralSet>) return detail::oracle_polyhedral(s, y);
        else return detail::oracle_ball(s, y);
      },
      set);
}

}  // namespace idiff
