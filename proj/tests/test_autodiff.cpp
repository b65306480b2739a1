#include <gtest/gtest.h>

#include <cmath>
#include <functional>

#include "idiff/autodiff/diff_fn.hpp"
#include "support.hpp"

namespace idiff {
namespace {

using testing::Gen;

TEST(Dual, ProductAndChainRules) {
  const Dual1 a(3.0, 1.0), b(2.0, 0.5);
  EXPECT_DOUBLE_EQ((a * b).eps, 1.0 * 2.0 + 3.0 * 0.5);
  EXPECT_DOUBLE_EQ((a / b).eps, (1.0 * 2.0 - 3.0 * 0.5) / 4.0);
  EXPECT_DOUBLE_EQ(exp(a).eps, std::exp(3.0));
  EXPECT_DOUBLE_EQ(log(a).eps, 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(sqrt(Dual1(4.0, 1.0)).eps, 0.25);
}

TEST(Dual, NestedDualGivesSecondDerivative) {
  // d²/dx² x³ at x = 2 is 12.
  const Dual2 x(Dual1(2.0, 1.0), Dual1(1.0, 0.0));
  const Dual2 y = x * x * x;
  EXPECT_DOUBLE_EQ(y.eps.eps, 12.0);
  EXPECT_DOUBLE_EQ(y.eps.val, 12.0);
  EXPECT_DOUBLE_EQ(y.val.eps, 12.0);
}

TEST(Dual, KinkConventionIsZeroDerivativeAndCounted) {
  const std::size_t before = detail::kink_hits();
  EXPECT_EQ(max(Dual1(0.0, 1.0), 0.0).eps, 0.0);
  EXPECT_EQ(abs(Dual1(0.0, 1.0)).eps, 0.0);
  EXPECT_EQ(clip(Dual1(1.0, 1.0), 0.0, 1.0).eps, 0.0);
  EXPECT_EQ(detail::kink_hits() - before, 3u);
  EXPECT_EQ(max(Dual1(0.5, 1.0), 0.0).eps, 1.0);
  EXPECT_EQ(clip(Dual1(0.5, 1.0), 0.0, 1.0).eps, 1.0);
}

// ---- jvp_x / jvp_theta / vjp_x worked examples ----------------------------

TEST(JvpX, WorkedExamples) {
  auto identity = make_diff_fn(2, 1, 2, [](const auto& x, const auto&) { return x; });
  EXPECT_EQ(jvp_x(identity, {1, 2}, {0}, {3, -4}).storage(), (std::vector<double>{3, -4}));

  auto square = make_diff_fn(1, 1, 1, [](const auto& x, const auto&) { return cwise_mul(x, x); });
  EXPECT_DOUBLE_EQ(jvp_x(square, {3}, {0}, {1})[0], 6.0);

  auto scale = make_diff_fn(1, 1, 1, [](const auto& x, const auto& t) { return cwise_mul(t, x); });
  EXPECT_DOUBLE_EQ(jvp_x(scale, {5}, {2}, {1})[0], 2.0);

  EXPECT_THROW((void)jvp_x(scale, {5}, {2}, {1, 1}), DimensionError);
}

TEST(JvpTheta, WorkedExamples) {
  auto theta_only = make_diff_fn(2, 2, 2, [](const auto&, const auto& t) { return t; });
  EXPECT_EQ(jvp_theta(theta_only, {0, 0}, {1, 1}, {7, 8}).storage(), (std::vector<double>{7, 8}));

  auto x_only = make_diff_fn(2, 2, 2, [](const auto& x, const auto&) { return x; });
  EXPECT_EQ(jvp_theta(x_only, {1, 2}, {1, 1}, {7, 8}).storage(), (std::vector<double>{0, 0}));

  auto sq = make_diff_fn(1, 1, 1, [](const auto&, const auto& t) { return cwise_mul(t, t); });
  EXPECT_DOUBLE_EQ(jvp_theta(sq, {0}, {3}, {2})[0], 12.0);
  EXPECT_THROW((void)jvp_theta(sq, {0}, {3}, {}), DimensionError);
}

TEST(VjpX, WorkedExamples) {
  auto identity = make_diff_fn(2, 1, 2, [](const auto& x, const auto&) { return x; });
  EXPECT_EQ(vjp_x(identity, {1, 2}, {0}, {3, 4}).storage(), (std::vector<double>{3, 4}));

  const DenseMatrix a = DenseMatrix::from_rows({{1, 2}, {3, 4}});
  auto linear = make_diff_fn(2, 1, 2, [a](const auto& x, const auto&) { return a * x; });
  EXPECT_EQ(vjp_x(linear, {0, 0}, {0}, {1, 0}).storage(), (std::vector<double>{1, 2}));

  auto constant = make_diff_fn(2, 1, 2, [](const auto& x, const auto& t) {
    using S = typename std::decay_t<decltype(x)>::value_type;
    return BasicVector<S>(2, t[0]);
  });
  EXPECT_EQ(vjp_x(constant, {1, 1}, {5}, {1, 1}).storage(), (std::vector<double>{0, 0}));
  EXPECT_THROW((void)vjp_x(constant, {1, 1}, {5}, {1}), DimensionError);
}

TEST(VjpX, UserClosureIsUsedAndValidated) {
  const DenseMatrix a = DenseMatrix::from_rows({{1, 2}, {3, 4}});
  auto fn = make_diff_fn(2, 1, 2, [a](const auto& x, const auto&) { return a * x; });
  int calls = 0;
  fn.vjp_x = [a, &calls](const DenseVector&, const DenseVector&, const DenseVector& w) {
    ++calls;
    return transpose_mul(a, w);
  };
  (void)vjp_x(fn, {0, 0}, {0}, {1, 1});
  EXPECT_EQ(calls, 1);
  EXPECT_LE(validate_closures(fn, {0.5, 0.5}, {0}), kClosureValidationTol);

  fn.vjp_x = [a](const DenseVector&, const DenseVector&, const DenseVector& w) { return a * w; };
  EXPECT_GT(validate_closures(fn, {0.5, 0.5}, {0}), kClosureValidationTol);
}

// ---- scalar functions ------------------------------------------------------

TEST(ScalarFn, GradHvpCrossWorkedExamples) {
  auto half_sq = make_scalar_fn(2, 1, [](const auto& x, const auto&) { return 0.5 * squared_norm(x); });
  EXPECT_EQ(grad_x(half_sq, {1, 2}, {0}).storage(), (std::vector<double>{1, 2}));
  EXPECT_EQ(hvp_x(half_sq, {1, 2}, {0}, {3, -1}).storage(), (std::vector<double>{3, -1}));

  auto scaled = make_scalar_fn(2, 1, [](const auto& x, const auto& t) { return 0.5 * t[0] * squared_norm(x); });
  EXPECT_EQ(cross_jvp(scaled, {1, 2}, {4}, {1}).storage(), (std::vector<double>{1, 2}));

  auto diag = make_scalar_fn(2, 2, [](const auto& x, const auto& t) { return 0.5 * dot(x, cwise_mul(t, x)); });
  EXPECT_EQ(hvp_x(diag, {0.3, -0.7}, {2, 3}, {1, 1}).storage(), (std::vector<double>{2, 3}));
  EXPECT_THROW((void)hvp_x(diag, {0.3, -0.7}, {2, 3}, {1}), DimensionError);
}

TEST(ScalarFn, ClosedFormGradientMatchesDualGradient) {
  const auto f = [](const auto& x, const auto& t) { return exp(t[0]) * squared_norm(x) + sum(x); };
  const auto grad = [](const auto& x, const auto& t) { return (2.0 * exp(t[0])) * x + 1.0; };
  const ScalarFn2 plain = make_scalar_fn(3, 1, f);
  const ScalarFn2 closed = make_scalar_fn(3, 1, f, grad);
  const DenseVector x{0.1, -0.4, 2.0}, th{0.3}, v{1, 2, 3}, w{1.5};
  EXPECT_LT(testing::max_diff(grad_x(plain, x, th), grad_x(closed, x, th)), 1e-13);
  EXPECT_LT(testing::max_diff(hvp_x(plain, x, th, v), hvp_x(closed, x, th, v)), 1e-12);
  EXPECT_LT(testing::max_diff(cross_jvp(plain, x, th, w), cross_jvp(closed, x, th, w)), 1e-12);
}

// ---- finite differences ----------------------------------------------------

TEST(FiniteDiffJacobian, WorkedExamples) {
  const auto id = finite_diff_jacobian([](const DenseVector& v) { return v; }, DenseVector{1, 2, 3});
  EXPECT_LT(testing::max_diff(id, DenseMatrix::identity(3)), 1e-9);
  const auto sq = finite_diff_jacobian([](const DenseVector& v) { return cwise_mul(v, v); }, DenseVector{3}, 1e-5);
  EXPECT_NEAR(sq(0, 0), 6.0, 1e-8);
  const auto zero = finite_diff_jacobian([](const DenseVector&) { return DenseVector{4, 5}; }, DenseVector{1});
  EXPECT_EQ(max_abs(zero), 0.0);
  EXPECT_THROW(finite_diff_jacobian([](const DenseVector& v) { return v; }, DenseVector{1}, 0.0), DomainError);
}

// ---- property tests over a random expression grammar -----------------------

/// A random smooth map R^3 × R^2 -> R^3 built from +, ⊙, matvec, exp, log and
/// clip restricted to its interior.
struct RandomExpr {
  DenseMatrix a, b;
  DenseVector c;
  int shape;

  template <class V>
  V operator()(const V& x, const V& t) const {
    using S = typename V::value_type;
    V lin = a * x + b * t + c;
    switch (shape) {
      case 0:
        return cwise_mul(lin, x) + map(t[0] * x, [](const S& s) { return exp(s); });
      case 1:
        return map(lin, [](const S& s) { return log(1.0 + s * s); }) + t[1] * x;
      case 2:
        return map(0.1 * lin, [](const S& s) { return clip(s, -50.0, 50.0); }) + cwise_mul(x, x);
      default:
        return cwise_mul(map(lin, [](const S& s) { return exp(0.2 * s); }), a * cwise_mul(x, x));
    }
  }
};

RandomExpr random_expr(Gen& g) {
  return {g.matrix(3, 3), g.matrix(3, 2), g.vector(3), static_cast<int>(g.index(0, 3))};
}

TEST(AutodiffProperty, PolynomialJvpExactToFewUlps) {
  Gen g(11);
  for (int trial = 0; trial < 50; ++trial) {
    const double x0 = g.uniform(-2, 2), c = g.uniform(-2, 2);
    auto poly = make_diff_fn(1, 1, 1, [](const auto& x, const auto& t) {
      return cwise_mul(cwise_mul(x, x), x) + t[0] * cwise_mul(x, x) - 3.0 * x;
    });
    const double got = jvp_x(poly, {x0}, {c}, {1})[0];
    const double want = 3 * x0 * x0 + 2 * c * x0 - 3;
    EXPECT_LE(std::fabs(got - want), 4 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::fabs(want)) * 4);
  }
}

TEST(AutodiffProperty, JvpVjpAdjointness) {
  Gen g(12);
  for (int trial = 0; trial < 100; ++trial) {
    auto fn = make_diff_fn(3, 2, 3, random_expr(g));
    const DenseVector x = g.vector(3), th = g.vector(2), v = g.vector(3), w = g.vector(3);
    const double lhs = dot(w, jvp_x(fn, x, th, v));
    const double rhs = dot(vjp_x(fn, x, th, w), v);
    EXPECT_LE(std::fabs(lhs - rhs), 1e-10 * std::max(1.0, std::fabs(lhs)));
    const DenseVector u = g.vector(2);
    EXPECT_LE(std::fabs(dot(w, jvp_theta(fn, x, th, u)) - dot(vjp_theta(fn, x, th, w), u)),
              1e-10 * std::max(1.0, std::fabs(lhs)));
  }
}

TEST(AutodiffProperty, HvpIsSymmetric) {
  Gen g(13);
  for (int trial = 0; trial < 100; ++trial) {
    const RandomExpr e = random_expr(g);
    auto f = make_scalar_fn(3, 2, [e](const auto& x, const auto& t) { return sum(e(x, t)); });
    const DenseVector x = g.vector(3), th = g.vector(2), u = g.vector(3), v = g.vector(3);
    const double lhs = dot(u, hvp_x(f, x, th, v));
    const double rhs = dot(v, hvp_x(f, x, th, u));
    EXPECT_LE(std::fabs(lhs - rhs), 1e-10 * std::max(1.0, std::fabs(lhs)));
  }
}

TEST(AutodiffProperty, JvpMatchesFiniteDifferences) {
  Gen g(14);
  for (int trial = 0; trial < 100; ++trial) {
    auto fn = make_diff_fn(3, 2, 3, random_expr(g));
    const DenseVector x = g.vector(3), th = g.vector(2), v = g.vector(3);
    const DenseMatrix fd = finite_diff_jacobian([&](const DenseVector& z) { return fn(z, th); }, x);
    const DenseVector want = fd * v;
    EXPECT_LE(norm(jvp_x(fn, x, th, v) - want), 1e-5 * std::max(1.0, norm(want)));
  }
}

}  // namespace
}  // namespace idiff
