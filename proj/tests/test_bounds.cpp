#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "idiff/bounds/bounds.hpp"
#include "idiff/conditions/fixed_points.hpp"
#include "idiff/implicit/implicit.hpp"
#include "idiff/solvers/inner.hpp"
#include "support.hpp"

namespace idiff {
namespace {

using testing::Gen;
using testing::max_diff;
using testing::rel_diff;

BoundConstants constants(double alpha, double beta, double gamma, double r) {
  BoundConstants k;
  k.alpha = alpha;
  k.beta = beta;
  k.gamma = gamma;
  k.radius_b = r;
  return k;
}

TEST(JacobianErrorBound, WorkedExamples) {
  EXPECT_DOUBLE_EQ(theorem1_bound(constants(1, 1, 0, 5), 0.1).value, 0.1);
  EXPECT_DOUBLE_EQ(theorem1_bound(constants(2, 1, 1, 4), 0.1).value, 0.15);
  EXPECT_EQ(theorem1_bound(constants(2, 1, 1, 4), 0.0).value, 0.0);
  EXPECT_THROW(theorem1_bound(constants(0, 1, 1, 4), 0.1), DomainError);
  EXPECT_THROW(theorem1_bound(constants(-1, 1, 1, 4), 0.1), DomainError);
}

TEST(JacobianErrorBound, FlagsErrorsOutsideValidityRadius) {
  BoundConstants k = constants(1, 1, 0, 0);
  k.validity = 0.5;
  EXPECT_TRUE(theorem1_bound(k, 0.5).valid);
  const BoundValue out = theorem1_bound(k, 0.6);
  EXPECT_FALSE(out.valid);
  EXPECT_DOUBLE_EQ(out.value, 0.6);
}

TEST(ProximalJacobianErrorBound, WorkedExamples) {
  const BoundConstants base = constants(2, 1, 1, 4);
  EXPECT_DOUBLE_EQ(corollary2_bound(base, 0.1).value, theorem1_bound(base, 0.1).value);
  BoundConstants k = constants(1, 1, 0, 0);
  k.prox_lipschitz = 1;
  k.strong_convexity = 1;
  EXPECT_DOUBLE_EQ(corollary2_bound(k, 0.2).value, 0.2);
  EXPECT_EQ(corollary2_bound(k, 0.0).value, 0.0);
}

TEST(Bounds, LinearAndIncreasingInIterateError) {
  Gen g(81);
  for (int trial = 0; trial < 100; ++trial) {
    BoundConstants k = constants(g.uniform(0.1, 3), g.uniform(0, 3), g.uniform(0, 3), g.uniform(0, 3));
    k.strong_convexity = g.uniform(0, 1);
    k.prox_lipschitz = g.uniform(0, 1);
    const double a = g.uniform(0, 1), b = a + g.uniform(1e-3, 1);
    EXPECT_LE(theorem1_bound(k, a).value, theorem1_bound(k, b).value);
    EXPECT_LE(corollary2_bound(k, a).value, corollary2_bound(k, b).value);
    EXPECT_NEAR(theorem1_bound(k, a + b).value, theorem1_bound(k, a).value + theorem1_bound(k, b).value, 1e-12);
  }
}

TEST(RidgeConstants, WorkedExamples) {
  const RidgeProblemData id{DenseMatrix::identity(2), DenseVector(2), DenseVector{1, 1}};
  const BoundConstants k = ridge_constants(id);
  EXPECT_NEAR(k.alpha, 4.0, 1e-9);
  EXPECT_EQ(k.beta, 2.0);
  EXPECT_EQ(k.gamma, 0.0);
  EXPECT_EQ(k.radius_b, 0.0);
  EXPECT_EQ(k.validity, std::numeric_limits<double>::infinity());
  EXPECT_NEAR(theorem1_bound(k, 1.0).value, 0.5, 1e-9);

  const RidgeProblemData diag_only{DenseMatrix(1, 1), DenseVector(1), DenseVector{2}};
  EXPECT_NEAR(ridge_constants(diag_only).alpha, 4.0, 1e-9);
  EXPECT_THROW(ridge_constants({DenseMatrix::identity(1), DenseVector(1), DenseVector{0.0}}), DomainError);
}

TEST(RidgeClosedForm, WorkedExamples) {
  const RidgeSolution s = ridge_closed_form({DenseMatrix::identity(1), DenseVector{2}, DenseVector{1}});
  EXPECT_NEAR(s.x[0], 1.0, 1e-15);
  EXPECT_NEAR(s.jacobian(0, 0), -0.5, 1e-15);

  Gen g(82);
  const RidgeProblemData zero{g.matrix(6, 3), DenseVector(6), g.vector(3, 0.1, 0.2)};
  const RidgeSolution z = ridge_closed_form(zero);
  EXPECT_EQ(norm(z.x), 0.0);
  EXPECT_EQ(max_diff(z.jacobian, DenseMatrix(3, 3)), 0.0);
}

ScalarFn2 ridge_objective(const RidgeProblemData& p) {
  return make_scalar_fn(
      p.theta.size(), p.theta.size(),
      [phi = p.design, y = p.target](const auto& x, const auto& th) {
        return squared_norm(phi * x - y) + dot(th, cwise_mul(x, x));
      },
      [phi = p.design, y = p.target](const auto& x, const auto& th) {
        return 2.0 * transpose_mul(phi, phi * x - y) + 2.0 * cwise_mul(th, x);
      });
}

RidgeProblemData random_ridge(Gen& g, std::size_t m, std::size_t d) {
  return {(1.0 / std::sqrt(double(m))) * g.matrix(m, d), g.gaussian(m), g.vector(d, 0.1, 0.2)};
}

TEST(RidgeClosedForm, MatchesImplicitEstimateAtTightSolution) {
  Gen g(83);
  const RidgeProblemData p = random_ridge(g, 30, 8);
  const RidgeSolution s = ridge_closed_form(p);
  ImplicitConfig cfg;
  cfg.tol = 1e-13;
  const DenseMatrix est = jacobian_estimate(stationary_condition(ridge_objective(p)), s.x, p.theta, cfg).matrix;
  EXPECT_LT(rel_diff(est, s.jacobian), 1e-8);
}

TEST(RidgeBound, HoldsAlongGradientDescent) {
  Gen g(84);
  for (std::size_t d : {10u, 50u}) {
    const RidgeProblemData p = random_ridge(g, d, d);
    const RidgeSolution truth = ridge_closed_form(p);
    const BoundConstants k = ridge_constants(p);
    const ScalarFn2 f = ridge_objective(p);
    const double lipschitz = 2.0 * frobenius_norm(p.system());
    TraceOptions opts;
    opts.reference = truth.x;
    const SolverResult run = gradient_descent(f, p.theta, DenseVector(d), 200, false, 1.0 / lipschitz, opts);
    const RootProblem rp = stationary_condition(f);
    ImplicitConfig cfg;
    cfg.tol = 1e-13;
    for (std::size_t t = 1; t <= 200; t += (d == 10 ? 1 : 7)) {
      const DenseMatrix est = jacobian_estimate(rp, run.trace.iterates[t], p.theta, cfg).matrix;
      const double err = frobenius_norm(est - truth.jacobian);
      EXPECT_LE(err, theorem1_bound(k, run.trace.error[t]).value + 1e-9) << "d=" << d << " t=" << t;
    }
  }
}

}  // namespace
}  // namespace idiff
