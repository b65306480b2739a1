#include <gtest/gtest.h>

#include <cmath>

#include "idiff/conditions/conditions.hpp"
#include "idiff/implicit/implicit.hpp"
#include "support.hpp"

namespace idiff {
namespace {

using testing::Gen;
using testing::max_diff;
using testing::rel_diff;

DenseMatrix jac(const RootProblem& rp, const DenseVector& x, const DenseVector& th) {
  return jacobian_estimate(rp, x, th).matrix;
}
DenseMatrix jac(const FixedPointProblem& fp, const DenseVector& x, const DenseVector& th) {
  return jac(to_root(fp), x, th);
}

/// Rows [first, first + count) of m.
DenseMatrix row_block(const DenseMatrix& m, std::size_t first, std::size_t count) {
  DenseMatrix out(count, m.cols());
  for (std::size_t i = 0; i < count; ++i) out.set_row(i, m.row(first + i));
  return out;
}
DenseMatrix col_block(const DenseMatrix& m, std::size_t first, std::size_t count) {
  DenseMatrix out(m.rows(), count);
  for (std::size_t j = 0; j < count; ++j) out.set_col(j, m.col(first + j));
  return out;
}

ScalarFn2 half_sq_dist(std::size_t d) {
  return make_scalar_fn(d, d, [](const auto& x, const auto& th) { return 0.5 * squared_norm(x - th); });
}

/// f = ½xᵀdiag(θ)x − yᵀx with minimizer y ⊘ θ.
ScalarFn2 diag_quadratic(const DenseVector& y) {
  return make_scalar_fn(y.size(), y.size(), [y](const auto& x, const auto& th) {
    return 0.5 * dot(x, cwise_mul(th, x)) - dot(y, x);
  });
}

struct Ridge {
  DenseMatrix design;
  DenseVector target;
  DenseVector theta;

  [[nodiscard]] ScalarFn2 objective() const {
    return make_scalar_fn(design.cols(), design.cols(), [phi = design, y = target](const auto& x, const auto& th) {
      return squared_norm(phi * x - y) + dot(th, cwise_mul(x, x));
    });
  }
  [[nodiscard]] DenseMatrix system() const {
    return design.transpose() * design + DenseMatrix::diagonal(theta);
  }
  [[nodiscard]] DenseVector solution() const { return dense_solve(system(), transpose_mul(design, target)); }
  [[nodiscard]] DenseMatrix jacobian() const {
    const DenseVector x = solution();
    return -1.0 * dense_solve(system(), DenseMatrix::diagonal(x));
  }
};

Ridge random_ridge(Gen& g, std::size_t m, std::size_t d) {
  return {(1.0 / std::sqrt(double(m))) * g.matrix(m, d), g.gaussian(m), g.vector(d, 0.1, 0.2)};
}

// ---- stationary / gradient descent -----------------------------------------

TEST(StationaryCondition, WorkedExamples) {
  const DenseVector th{0.4, -1.2, 2.0};
  EXPECT_LT(max_diff(jac(stationary_condition(half_sq_dist(3)), th, th), DenseMatrix::identity(3)), 1e-10);

  const DenseVector y{1.0, -2.0, 0.5}, t{2.0, 4.0, 0.5};
  const DenseVector x = cwise_div(y, t);
  const DenseMatrix want = DenseMatrix::diagonal(DenseVector{-y[0] / (t[0] * t[0]), -y[1] / (t[1] * t[1]), -y[2] / (t[2] * t[2])});
  EXPECT_LT(max_diff(jac(stationary_condition(diag_quadratic(y)), x, t), want), 1e-10);

  Gen g(41);
  const Ridge r = random_ridge(g, 30, 6);
  EXPECT_LT(rel_diff(jac(stationary_condition(r.objective()), r.solution(), r.theta), r.jacobian()), 1e-8);
}

TEST(StationaryCondition, TaggedSymmetricNegative) {
  EXPECT_EQ(stationary_condition(half_sq_dist(2)).structure, OperatorStructure::SymmetricNegative);
}

TEST(GradientDescentFp, WorkedExamplesMatchStationary) {
  const DenseVector th{0.4, -1.2, 2.0};
  EXPECT_LT(max_diff(jac(gradient_descent_fp(half_sq_dist(3), 0.5), th, th), DenseMatrix::identity(3)), 1e-10);
  const DenseVector y{1.0, -2.0, 0.5}, t{2.0, 4.0, 0.5};
  const DenseVector x = cwise_div(y, t);
  EXPECT_LT(max_diff(jac(gradient_descent_fp(diag_quadratic(y), 0.5), x, t),
                     jac(stationary_condition(diag_quadratic(y)), x, t)),
            1e-10);
  Gen g(42);
  const Ridge r = random_ridge(g, 30, 6);
  EXPECT_LT(rel_diff(jac(gradient_descent_fp(r.objective(), 0.5), r.solution(), r.theta), r.jacobian()), 1e-8);
  EXPECT_THROW(gradient_descent_fp(half_sq_dist(2), 0.0), DomainError);
  EXPECT_THROW(gradient_descent_fp(half_sq_dist(2), -1.0), DomainError);
}

TEST(GradientDescentFp, StepSizeCancels) {
  Gen g(43);
  const Ridge r = random_ridge(g, 20, 5);
  const DenseMatrix base = jac(stationary_condition(r.objective()), r.solution(), r.theta);
  for (double step : {1e-3, 0.1, 0.5, 2.0}) {
    EXPECT_LT(rel_diff(jac(gradient_descent_fp(r.objective(), step), r.solution(), r.theta), base), 1e-8) << step;
  }
}

// ---- KKT and QP -------------------------------------------------------------

TEST(KktCondition, WorkedExamples) {
  // min ½z² s.t. θ − z ≤ 0.
  const ScalarFn2 f = make_scalar_fn(1, 1, [](const auto& z, const auto&) { return 0.5 * z[0] * z[0]; });
  ConstraintFns cons;
  cons.ineq = make_diff_fn(1, 1, 1, [](const auto& z, const auto& th) { return th - z; });
  const RootProblem rp = kkt_condition(f, cons);
  const DenseVector root = KktPoint{{1.0}, {}, {1.0}}.pack();
  EXPECT_LT(norm(rp.residual(root, {1.0})), 1e-15);
  const DenseMatrix j = jac(rp, root, {1.0});
  EXPECT_NEAR(j(0, 0), 1.0, 1e-10);
  EXPECT_NEAR(j(1, 0), 1.0, 1e-10);
}

TEST(KktCondition, NoConstraintsReducesToStationary) {
  const DenseVector y{1.0, -2.0}, t{2.0, 4.0};
  const DenseVector x = cwise_div(y, t);
  const RootProblem kkt = kkt_condition(diag_quadratic(y), {});
  EXPECT_EQ(kkt.dim_x(), 2u);
  EXPECT_LT(max_diff(kkt.residual(x, t), stationary_condition(diag_quadratic(y)).residual(x, t)), 1e-15);
  EXPECT_LT(max_diff(jac(kkt, x, t), jac(stationary_condition(diag_quadratic(y)), x, t)), 1e-10);
}

TEST(KktCondition, RejectsMismatchedConstraints) {
  ConstraintFns cons;
  cons.eq = make_diff_fn(3, 2, 1, [](const auto& z, const auto&) { return z.segment(0, 1); });
  EXPECT_THROW(kkt_condition(half_sq_dist(2), cons), DimensionError);
}

TEST(KktPoint, PackRoundTrip) {
  const KktPoint pt{{1, 2, 3}, {4}, {5, 6}};
  const DenseVector packed = pt.pack();
  EXPECT_LT(max_diff(packed, DenseVector{1, 2, 3, 4, 5, 6}), 0.0 + 1e-300);
  const KktPoint back = KktPoint::unpack(packed, 3, 1, 2);
  EXPECT_EQ(back.primal.size(), 3u);
  EXPECT_EQ(back.eq_dual[0], 4.0);
  EXPECT_EQ(back.ineq_dual[1], 6.0);
  EXPECT_THROW(KktPoint::unpack(packed, 3, 1, 1), DimensionError);
}

QpData equality_qp() {
  return {DenseMatrix::identity(2), DenseVector(2), DenseMatrix::from_rows({{1, 1}}), DenseVector{1},
          DenseMatrix(0, 2), DenseVector()};
}

TEST(QpSolveDense, EqualityOnlyWorkedExample) {
  const KktPoint sol = qp_solve_dense(equality_qp());
  EXPECT_LT(max_diff(sol.primal, DenseVector{0.5, 0.5}), 1e-15);
  EXPECT_NEAR(sol.eq_dual[0], -0.5, 1e-15);
  EXPECT_TRUE(sol.ineq_dual.empty());
}

TEST(QpKkt, EqualityOnlyJacobianMatchesSaddleSystem) {
  const QpData qp = equality_qp();
  const QpLayout lay = qp_layout(qp);
  const DenseMatrix j = jac(qp_kkt(qp), qp_solve_dense(qp).pack(), qp_theta(qp));
  // (z, ν) = K⁻¹(−c, d) with K = [[Q, Eᵀ], [E, 0]].
  const DenseMatrix k = DenseMatrix::from_rows({{1, 0, 1}, {0, 1, 1}, {1, 1, 0}});
  const DenseMatrix want_c = -1.0 * dense_solve(k, DenseMatrix::from_rows({{1, 0}, {0, 1}, {0, 0}}));
  const DenseMatrix want_d = dense_solve(k, DenseMatrix::from_rows({{0}, {0}, {1}}));
  EXPECT_LT(max_diff(col_block(j, lay.lin_at(), 2), want_c), 1e-10);
  EXPECT_LT(max_diff(col_block(j, lay.eq_rhs_at(), 1), want_d), 1e-10);
}

TEST(QpKkt, UnconstrainedQuadraticTracksTheta) {
  // Q = 1, c = −θ: z* = θ.
  const QpData qp{DenseMatrix::identity(1), DenseVector{-0.7}, DenseMatrix(0, 1), {}, DenseMatrix(0, 1), {}};
  const KktPoint sol = qp_solve_dense(qp);
  EXPECT_NEAR(sol.primal[0], 0.7, 1e-15);
  const DenseMatrix j = jac(qp_kkt(qp), sol.pack(), qp_theta(qp));
  EXPECT_NEAR(-j(0, qp_layout(qp).lin_at()), 1.0, 1e-10);
}

QpData simplex_projection_qp(const DenseVector& y) {
  const std::size_t d = y.size();
  return {DenseMatrix::identity(d), -1.0 * y, DenseMatrix(1, d, 1.0), DenseVector{1.0},
          -1.0 * DenseMatrix::identity(d), DenseVector(d)};
}

TEST(QpSolveDense, MatchesSimplexProjection) {
  Gen g(44);
  for (int trial = 0; trial < 50; ++trial) {
    const DenseVector y = g.vector(1 + g.index(1, 7), -2, 2);
    EXPECT_LT(max_diff(qp_solve_dense(simplex_projection_qp(y)).primal, proj_simplex(y)), 1e-8);
  }
}

TEST(QpSolveDense, Errors) {
  QpData singular = equality_qp();
  singular.eq_mat = DenseMatrix::from_rows({{1, 1}, {2, 2}});
  singular.eq_rhs = DenseVector{1, 2};
  EXPECT_THROW(qp_solve_dense(singular), SingularMatrixError);
  QpData asym = equality_qp();
  asym.quad(0, 1) = 0.5;
  EXPECT_THROW(qp_solve_dense(asym), DomainError);
  QpData indefinite = equality_qp();
  indefinite.quad(1, 1) = -1.0;
  EXPECT_THROW(qp_solve_dense(indefinite), DomainError);
  QpData bad_dims = equality_qp();
  bad_dims.lin = DenseVector(3);
  EXPECT_THROW(qp_solve_dense(bad_dims), DimensionError);
}

// ---- proximal / projected / mirror -----------------------------------------

TEST(ProximalGradientFp, IdentityProxIsGradientDescent) {
  Gen g(45);
  const Ridge r = random_ridge(g, 20, 4);
  const FixedPointProblem prox = proximal_gradient_fp(r.objective(), prox::identity(4), 0.3);
  EXPECT_LT(max_diff(prox.t_map(r.solution(), r.theta), gradient_descent_fp(r.objective(), 0.3).t_map(r.solution(), r.theta)),
            1e-15);
  EXPECT_LT(rel_diff(jac(prox, r.solution(), r.theta), r.jacobian()), 1e-8);
}

TEST(ProximalGradientFp, LassoWithIdentityDesign) {
  const DenseVector b{2.0, -0.3, -1.5, 0.1};
  const double log_lam = std::log(0.5);
  const ScalarFn2 f = make_scalar_fn(4, 1, [b](const auto& x, const auto&) { return 0.5 * squared_norm(x - b); });
  const FixedPointProblem fp = proximal_gradient_fp(f, prox::lasso_log_scale(4), 1.0);
  const DenseVector x = prox_lasso(b, 0.5);
  EXPECT_LT(norm(fp.t_map(x, {log_lam}) - x), 1e-15);
  const DenseMatrix j = jac(fp, x, {log_lam});
  const DenseVector want{-0.5, 0.0, 0.5, 0.0};
  EXPECT_LT(max_diff(j.col(0), want), 1e-10);
}

TEST(ProximalGradientFp, ElasticNetMatchesFiniteDifferences) {
  // With f = ½‖x − θ‖² and unit step the root is prox_g(θ).
  const FixedPointProblem fp = proximal_gradient_fp(half_sq_dist(4), prox::elastic_net(4, 0.4, 0.6), 1.0);
  const DenseVector th{1.3, -0.2, -0.9, 0.05};
  const DenseVector x = prox_elastic_net(th, 0.4, 0.6);
  const DenseMatrix fd = finite_diff_jacobian([](const DenseVector& t) { return prox_elastic_net(t, 0.4, 0.6); }, th);
  EXPECT_LT(max_diff(jac(fp, x, th), fd), 1e-6);
  EXPECT_THROW(proximal_gradient_fp(half_sq_dist(4), prox::identity(4), 0.0), DomainError);
  EXPECT_THROW(proximal_gradient_fp(half_sq_dist(4), prox::identity(3), 1.0), DimensionError);
}

TEST(ProjectedGradientFp, WorkedExamples) {
  Gen g(46);
  const Ridge r = random_ridge(g, 20, 4);
  const FixedPointProblem whole = projected_gradient_fp(r.objective(), projection::whole_space(4), 0.2);
  EXPECT_LT(rel_diff(jac(whole, r.solution(), r.theta), jac(gradient_descent_fp(r.objective(), 0.2), r.solution(), r.theta)),
            1e-12);

  const DenseVector th{0.2, 0.3, 0.5};
  const FixedPointProblem fp = projected_gradient_fp(half_sq_dist(3), projection::simplex(3), 1.0);
  const DenseMatrix want = DenseMatrix::identity(3) - (1.0 / 3.0) * DenseMatrix(3, 3, 1.0);
  EXPECT_LT(max_diff(fp.t_map(th, th), th), 1e-15);
  EXPECT_LT(max_diff(jac(fp, th, th), want), 1e-10);
}

TEST(MirrorDescentFp, WorkedExamples) {
  const ScalarFn2 constant = make_scalar_fn(3, 0, [](const auto& x, const auto&) { return 0.0 * x[0] + 1.0; });
  const FixedPointProblem fp = mirror_descent_fp(constant, mirror::kl(3), bregman::kl_simplex(3), 1.0);
  const DenseVector x{0.2, 0.5, 0.3};
  EXPECT_LT(max_diff(fp.t_map(x, {}), x), 1e-15);

  const ScalarFn2 linear = make_scalar_fn(2, 2, [](const auto& x, const auto& th) { return dot(th, x); });
  const FixedPointProblem lin = mirror_descent_fp(linear, mirror::kl(2), bregman::kl_simplex(2), 0.7);
  EXPECT_LT(max_diff(lin.t_map({0.5, 0.5}, {0.0, 0.0}), DenseVector{0.5, 0.5}), 1e-15);
  EXPECT_THROW(fp.t_map({-0.1, 0.6, 0.5}, {}), DomainError);
}

/// f = ½(x − θ)ᵀQ(x − θ), minimized over a simplex at x* = θ when θ is interior.
ScalarFn2 weighted_dist(const DenseMatrix& q) {
  return make_scalar_fn(q.rows(), q.rows(), [q](const auto& x, const auto& th) {
    const auto diff = x - th;
    return 0.5 * dot(diff, q * diff);
  });
}

TEST(MirrorDescentFp, AgreesWithProjectedGradientOnInteriorSolutions) {
  Gen g(47);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t d = 2 + g.index(0, 4);
    const DenseMatrix q = g.spd(d, 0.5, 2.0);
    DenseVector th = g.vector(d, 0.2, 1.0);
    th *= 1.0 / sum(th);
    const DenseMatrix pg = jac(projected_gradient_fp(weighted_dist(q), projection::simplex(d), 0.4), th, th);
    const DenseMatrix md = jac(mirror_descent_fp(weighted_dist(q), mirror::kl(d), bregman::kl_simplex(d), 0.4), th, th);
    EXPECT_LT(rel_diff(md, pg), 1e-6) << "d=" << d;
  }
}

TEST(MirrorDescentFp, RowWiseSimplexAgreesWithProjected) {
  Gen g(48);
  const std::size_t rows = 3, cols = 4, d = rows * cols;
  const DenseMatrix q = g.spd(d, 0.5, 2.0);
  DenseVector th(d);
  for (std::size_t i = 0; i < rows; ++i) {
    DenseVector row = g.vector(cols, 0.2, 1.0);
    row *= 1.0 / sum(row);
    for (std::size_t j = 0; j < cols; ++j) th[j * rows + i] = row[j];
  }
  const DenseMatrix pg = jac(projected_gradient_fp(weighted_dist(q), projection::simplex_rows(rows, cols), 0.4), th, th);
  const DenseMatrix md =
      jac(mirror_descent_fp(weighted_dist(q), mirror::kl(d), bregman::kl_simplex_rows(rows, cols), 0.4), th, th);
  EXPECT_LT(rel_diff(md, pg), 1e-6);
}

// ---- Newton -----------------------------------------------------------------

TEST(NewtonFp, WorkedExamples) {
  const DiffFn2 shift = make_diff_fn(2, 2, 2, [](const auto& x, const auto& th) { return x - th; });
  EXPECT_LT(max_diff(jac(newton_fp(shift, 1.0), {1, 2}, {1, 2}), DenseMatrix::identity(2)), 1e-12);

  const DiffFn2 cube = make_diff_fn(1, 1, 1, [](const auto& x, const auto& th) { return cwise_mul(x, cwise_mul(x, x)) - th; });
  EXPECT_NEAR(jac(newton_fp(cube, 0.5), {2.0}, {8.0})(0, 0), 1.0 / 12.0, 1e-12);

  Gen g(49);
  const Ridge r = random_ridge(g, 25, 5);
  const DenseMatrix newton = jac(newton_fp(gradient_map(r.objective()), 1.0), r.solution(), r.theta);
  EXPECT_LT(rel_diff(newton, jac(stationary_condition(r.objective()), r.solution(), r.theta)), 1e-8);
  EXPECT_THROW(newton_fp(shift, 0.0), DomainError);
  const FixedPointProblem flat = newton_fp(make_diff_fn(1, 1, 1, [](const auto& x, const auto&) { return 0.0 * x; }), 1.0);
  EXPECT_THROW(flat.t_map({1.0}, {1.0}), SingularMatrixError);
}

TEST(NewtonFp, ImplicitSystemIsScaledIdentity) {
  Gen g(50);
  const Ridge r = random_ridge(g, 25, 5);
  const RootProblem rp = to_root(newton_fp(gradient_map(r.objective()), 0.3));
  const LinearMap a = a_operator(rp, r.solution(), r.theta);
  EXPECT_LT(max_diff(a.materialize(), 0.3 * DenseMatrix::identity(5)), 1e-12);
}

// ---- block prox -------------------------------------------------------------

TEST(BlockProxFp, SingleBlockAndSeparableSplitMatchProximalGradient) {
  Gen g(51);
  const Ridge r = random_ridge(g, 30, 6);
  const ScalarFn2 f = r.objective();
  const double step = 0.2;
  const FixedPointProblem whole = proximal_gradient_fp(f, prox::lasso(6, 0.3), step);
  const FixedPointProblem single = block_prox_fp(f, {{{0, 6}, prox::lasso(6, 0.3), step}});
  const FixedPointProblem split = block_prox_fp(f, {{{4, 2}, prox::lasso(2, 0.3), step}, {{0, 4}, prox::lasso(4, 0.3), step}});
  for (int trial = 0; trial < 10; ++trial) {
    const DenseVector x = g.vector(6);
    EXPECT_LT(max_diff(single.t_map(x, r.theta), whole.t_map(x, r.theta)), 1e-15);
    EXPECT_LT(max_diff(split.t_map(x, r.theta), whole.t_map(x, r.theta)), 1e-15);
  }
  const DenseVector x = g.vector(6, 0.5, 1.0);
  EXPECT_LT(max_diff(jac(split, x, r.theta), jac(whole, x, r.theta)), 1e-10);
}

TEST(BlockProxFp, RejectsBadPartitions) {
  const ScalarFn2 f = half_sq_dist(4);
  auto build = [&f](std::vector<ProxBlock> blocks) { return block_prox_fp(f, std::move(blocks)); };
  const std::vector<ProxBlock> overlapping{{{0, 3}, prox::identity(3), 1.0}, {{2, 2}, prox::identity(2), 1.0}};
  const std::vector<ProxBlock> incomplete{{{0, 3}, prox::identity(3), 1.0}};
  const std::vector<ProxBlock> wrong_prox{{{0, 4}, prox::identity(3), 1.0}};
  const std::vector<ProxBlock> zero_step{{{0, 4}, prox::identity(4), 0.0}};
  EXPECT_THROW(build(overlapping), DimensionError);
  EXPECT_THROW(build(incomplete), DimensionError);
  EXPECT_THROW(build(wrong_prox), DimensionError);
  EXPECT_THROW(build(zero_step), DomainError);
}

// ---- conic ------------------------------------------------------------------

TEST(ConicResidual, WorkedExamples) {
  const ConeSpec mixed{{{ConeKind::Free, 1}, {ConeKind::Nonneg, 2}, {ConeKind::Zero, 1}}};
  const RootProblem rp = conic_residual(mixed);
  const DenseVector zero_theta(16);
  const DenseVector x{-1.0, 2.0, -3.0, 4.0};
  EXPECT_LT(max_diff(rp.residual(x, zero_theta), x - cone_projection(mixed, x)), 1e-15);
  EXPECT_LT(norm(rp.residual(DenseVector{-1.0, 2.0, 0.5, 0.0}, zero_theta)), 1e-15);

  const ConeSpec free{{{ConeKind::Free, 3}}};
  const DenseMatrix skew = DenseMatrix::from_rows({{0, 1, -2}, {-1, 0, 3}, {2, -3, 0}});
  const DenseVector y{0.5, -1.0, 2.0};
  EXPECT_LT(max_diff(conic_residual(free).residual(y, skew.flatten()), skew * y), 1e-15);

  const DenseMatrix not_skew = DenseMatrix::from_rows({{1, 0, 0}, {0, 0, 0}, {0, 0, 0}});
  EXPECT_THROW(conic_residual(free).residual(y, not_skew.flatten()), DomainError);
}

/// Embedding matrix of min cz s.t. az ≤ b in one variable.
DenseMatrix lp_embedding(double a, double b, double c) {
  return DenseMatrix::from_rows({{0, a, c}, {-a, 0, b}, {-c, -b, 0}});
}

TEST(ConicResidual, OneDimensionalLpMatchesFiniteDifferences) {
  // min z s.t. −z ≤ b at b = −1: z* = −b, dual y* = c, τ = 1.
  const ConeSpec cones{{{ConeKind::Free, 1}, {ConeKind::Nonneg, 1}, {ConeKind::Nonneg, 1}}};
  const RootProblem rp = conic_residual(cones);
  const double a = -1.0, b = -1.0, c = 1.0;
  const DenseVector theta = lp_embedding(a, b, c).flatten();
  const DenseVector root{1.0, 1.0, 1.0};
  EXPECT_LT(norm(rp.residual(root, theta)), 1e-15);

  // The root is defined up to scale; compare derivatives of x / τ.
  auto normalized = [&](const DenseVector& dx) { return dx - (dx[2] / root[2]) * root; };
  auto resolved = [&](double bb, double cc) { return DenseVector{bb / a, cc, 1.0}; };
  const double h = 1e-6;
  const DenseVector dir_b = (lp_embedding(0, 1, 0)).flatten();
  const DenseVector dir_c = (lp_embedding(0, 0, 1)).flatten();
  const DenseVector fd_b = (1.0 / (2 * h)) * (resolved(b + h, c) - resolved(b - h, c));
  const DenseVector fd_c = (1.0 / (2 * h)) * (resolved(b, c + h) - resolved(b, c - h));
  EXPECT_LT(max_diff(normalized(root_jvp(rp, root, theta, dir_b).value), fd_b), 1e-6);
  EXPECT_LT(max_diff(normalized(root_jvp(rp, root, theta, dir_c).value), fd_c), 1e-6);
}

// ---- cross-consistency ------------------------------------------------------

TEST(CatalogConsistency, BoxConstrainedQuadraticAcrossConditions) {
  Gen g(52);
  int checked = 0;
  for (int trial = 0; trial < 40 && checked < 10; ++trial) {
    const std::size_t p = 2 + g.index(0, 4);
    const DenseMatrix raw = g.spd(p, 0.5, 3.0);
    const DenseMatrix q = 0.5 * (raw + raw.transpose());
    const DenseVector c = g.vector(p, -3, 3);
    const DenseVector lo(p, -1.0), hi(p, 1.0);
    DenseMatrix m(2 * p, p);
    DenseVector h(2 * p);
    for (std::size_t i = 0; i < p; ++i) {
      m(i, i) = 1.0;
      h[i] = hi[i];
      m(p + i, i) = -1.0;
      h[p + i] = -lo[i];
    }
    const QpData qp{q, c, DenseMatrix(0, p), DenseVector(), m, h};
    const KktPoint sol = qp_solve_dense(qp);
    // Require strict complementarity so every condition is differentiable.
    const DenseVector slack = m * sol.primal - h;
    bool strict = true;
    for (std::size_t i = 0; i < 2 * p; ++i) strict = strict && std::max(-slack[i], sol.ineq_dual[i]) > 1e-4;
    if (!strict) continue;
    ++checked;

    const QpLayout lay = qp_layout(qp);
    const DenseMatrix via_qp =
        row_block(col_block(jac(qp_kkt(qp), sol.pack(), qp_theta(qp)), lay.lin_at(), p), 0, p);

    const ScalarFn2 f = make_scalar_fn(p, p, [q](const auto& z, const auto& th) { return 0.5 * dot(z, q * z) + dot(th, z); });
    ConstraintFns cons;
    cons.ineq = make_diff_fn(p, p, 2 * p, [m, h](const auto& z, const auto&) { return m * z - h; });
    const DenseMatrix via_kkt = row_block(jac(kkt_condition(f, cons), sol.pack(), c), 0, p);

    const DenseMatrix via_pg = jac(projected_gradient_fp(f, projection::box(lo, hi), 0.25), sol.primal, c);
    // All-active instances have J = 0, so the scale is floored at 1.
    const double scale = std::max(1.0, frobenius_norm(via_qp));
    EXPECT_LT(frobenius_norm(via_kkt - via_qp) / scale, 1e-6);
    EXPECT_LT(frobenius_norm(via_pg - via_qp) / scale, 1e-6);
  }
  EXPECT_GE(checked, 5);
}

}  // namespace
}  // namespace idiff
