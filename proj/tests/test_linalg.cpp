#include <gtest/gtest.h>

#include <algorithm>
#include <vector>

#include "idiff/linalg/krylov.hpp"
#include "idiff/linalg/linear_map.hpp"
#include "idiff/linalg/lu.hpp"
#include "support.hpp"

namespace idiff {
namespace {

using testing::Gen;
using testing::max_diff;

LinearMap mat(std::initializer_list<std::initializer_list<double>> rows) {
  return LinearMap::from_matrix(DenseMatrix::from_rows(rows));
}

void expect_near(const DenseVector& got, const DenseVector& want, double tol) {
  ASSERT_EQ(got.size(), want.size());
  for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i], want[i], tol) << "entry " << i;
}

TEST(DenseVector, RejectsNonFiniteInput) {
  EXPECT_THROW(DenseVector({1.0, std::nan("")}), DomainError);
  EXPECT_THROW(DenseVector(std::vector<double>{std::numeric_limits<double>::infinity()}), DomainError);
  EXPECT_THROW(DenseMatrix(2, 1, std::vector<double>{1.0, std::nan("")}), DomainError);
  EXPECT_THROW(DenseMatrix(2, 2, std::vector<double>{1.0}), DimensionError);
}

TEST(DenseMatrix, ColumnMajorLayoutAndProducts) {
  const DenseMatrix a = DenseMatrix::from_rows({{1, 2}, {3, 4}});
  EXPECT_EQ(a.storage(), (std::vector<double>{1, 3, 2, 4}));
  expect_near(a * DenseVector{1, 0}, {1, 3}, 0);
  expect_near(transpose_mul(a, DenseVector{1, 0}), {1, 2}, 0);
  const DenseMatrix p = a * a;
  EXPECT_DOUBLE_EQ(p(0, 0), 7);
  EXPECT_DOUBLE_EQ(p(1, 1), 22);
}

TEST(CgSolve, WorkedExamples) {
  auto r1 = cg_solve(LinearMap::identity(3), {1, 2, 3});
  expect_near(r1.x, {1, 2, 3}, 1e-12);
  EXPECT_TRUE(r1.report.converged);

  auto r2 = cg_solve(mat({{4, 1}, {1, 3}}), {1, 2});
  expect_near(r2.x, {1.0 / 11, 7.0 / 11}, 1e-12);
  EXPECT_TRUE(r2.report.converged);
  EXPECT_LE(r2.report.final_residual_norm, kDefaultKrylovTol);

  auto r3 = cg_solve(mat({{2, 0}, {0, 2}}), {0, 0});
  expect_near(r3.x, {0, 0}, 0);
  EXPECT_TRUE(r3.report.converged);
  EXPECT_EQ(r3.report.iterations, 0u);
}

TEST(CgSolve, NonConvergenceIsReportedNotThrown) {
  auto r = cg_solve(mat({{1, 0}, {0, -1}}), {1, 1});
  EXPECT_FALSE(r.report.converged);
  auto capped = cg_solve(LinearMap::from_matrix(Gen(1).spd(20, 0.01, 10)), Gen(2).vector(20), 1e-14, 2);
  EXPECT_FALSE(capped.report.converged);
  EXPECT_EQ(capped.report.iterations, 2u);
}

TEST(GmresSolve, WorkedExamples) {
  expect_near(gmres_solve(LinearMap::identity(2), {5, -1}).x, {5, -1}, 1e-12);
  expect_near(gmres_solve(mat({{0, 1}, {-1, 0}}), {1, 0}).x, {0, 1}, 1e-12);
  expect_near(gmres_solve(mat({{2, 0}, {0, 3}}), {2, 3}).x, {1, 1}, 1e-12);
}

TEST(BicgstabSolve, WorkedExamples) {
  expect_near(bicgstab_solve(LinearMap::identity(2), {5, -1}).x, {5, -1}, 1e-12);
  expect_near(bicgstab_solve(mat({{0, 1}, {-1, 0}}), {1, 0}).x, {0, 1}, 1e-12);
  expect_near(bicgstab_solve(mat({{2, 0}, {0, 3}}), {2, 3}).x, {1, 1}, 1e-12);
}

TEST(BicgstabSolve, BreakdownIsReported) {
  // r̂ᵀA r̂ = 0 for a rotation, so the first step breaks down.
  auto r = bicgstab_solve(mat({{0, 1}, {-1, 0}}), {1, 1}, 1e-10, 1);
  EXPECT_FALSE(r.report.converged);
}

TEST(BicgstabSolve, NonFiniteOperatorTerminatesUnconverged) {
  const auto nan_map = [](const DenseVector& v) { return DenseVector(v.size(), std::nan("")); };
  const LinearMap op(2, 2, nan_map, nan_map);
  auto r = bicgstab_solve(op, {1, 1}, 1e-10, 50);
  EXPECT_FALSE(r.report.converged);
}

TEST(NormalCgSolve, WorkedExamples) {
  expect_near(normal_cg_solve(LinearMap::identity(2), {1, 1}).x, {1, 1}, 1e-12);
  auto singular = normal_cg_solve(mat({{1, 0}, {0, 0}}), {1, 0});
  expect_near(singular.x, {1, 0}, 1e-12);
  EXPECT_TRUE(singular.report.converged);
  expect_near(normal_cg_solve(mat({{2}}), {4}).x, {2}, 1e-12);
}

TEST(NormalCgSolve, InconsistentSystemGivesMinimumNormLeastSquares) {
  auto r = normal_cg_solve(mat({{1, 1}, {1, 1}}), {1, 3});
  expect_near(r.x, {1, 1}, 1e-10);
  EXPECT_TRUE(r.report.converged);
}

TEST(DenseSolve, WorkedExamples) {
  const DenseMatrix id = DenseMatrix::identity(2);
  EXPECT_EQ(max_diff(dense_solve(id, id), id), 0.0);
  const DenseMatrix x = dense_solve(DenseMatrix::from_rows({{2, 0}, {0, 4}}), DenseMatrix::from_rows({{2}, {4}}));
  EXPECT_NEAR(x(0, 0), 1, 1e-15);
  EXPECT_NEAR(x(1, 0), 1, 1e-15);
  EXPECT_THROW(dense_solve(DenseMatrix::from_rows({{1, 1}, {1, 1}}), id), SingularMatrixError);
}

TEST(LuFactorization, TransposeSolveMatchesExplicitTranspose) {
  Gen g(3);
  const DenseMatrix a = g.well_conditioned(7);
  const DenseVector b = g.vector(7);
  const LuFactorization lu(a);
  EXPECT_LT(max_diff(lu.solve_transpose(b), dense_solve(a.transpose(), b)), 1e-12);
}

TEST(MinEigenvalue, MatchesConstructedSpectrum) {
  Gen g(4);
  const DenseMatrix a = g.spd(12, 0.3, 9.0);
  EXPECT_NEAR(min_eigenvalue_spd(a), 0.3, 1e-8);
  EXPECT_NEAR(min_eigenvalue_spd(DenseMatrix::diagonal({4, 2, 7})), 2.0, 1e-10);
}

TEST(SymmetricEigenvalues, RecoverConstructedSpectrum) {
  Gen g(14);
  for (std::size_t n : {1, 2, 5, 30}) {
    const DenseMatrix q = g.orthogonal(n);
    DenseVector eig = g.vector(n, -3.0, 5.0);
    DenseMatrix a = q * DenseMatrix::diagonal(eig) * q.transpose();
    a = 0.5 * (a + a.transpose());
    std::vector<double> want(eig.begin(), eig.end());
    std::sort(want.begin(), want.end());
    const std::vector<double> got = symmetric_eigenvalues(a);
    ASSERT_EQ(got.size(), n);
    for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(got[i], want[i], 1e-11) << "n=" << n << " i=" << i;
  }
}

TEST(SymmetricEigenvalues, ClusteredBottomOfSpectrum) {
  // Inverse power iteration stalls on nearly equal smallest eigenvalues; Jacobi does not.
  Gen g(15);
  const DenseMatrix q = g.orthogonal(20);
  DenseVector eig = g.vector(20, 1.0, 4.0);
  eig[0] = 0.1;
  eig[1] = 0.1 + 1e-9;
  const std::vector<double> got = symmetric_eigenvalues(q * DenseMatrix::diagonal(eig) * q.transpose());
  EXPECT_NEAR(got.front(), 0.1, 1e-12);
}

TEST(MaxEigenvalue, PowerIterationMatchesSpectrum) {
  Gen g(16);
  EXPECT_NEAR(max_eigenvalue_psd(g.spd(15, 0.2, 6.0)), 6.0, 1e-8);
  EXPECT_EQ(max_eigenvalue_psd(DenseMatrix(3, 3)), 0.0);
}

TEST(LinearMapProperty, AdjointIdentityOnRandomPairs) {
  Gen g(5);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t m = g.index(1, 9), n = g.index(1, 9);
    const DenseMatrix a = g.matrix(m, n);
    // One map with an explicit transpose and one synthesized by materialization.
    const LinearMap explicit_t = LinearMap::from_matrix(a);
    const LinearMap synthesized(m, n, [a](const DenseVector& v) { return a * v; });
    const DenseVector v = g.vector(n), w = g.vector(m);
    for (const LinearMap* op : {&explicit_t, &synthesized}) {
      const double lhs = dot(w, op->apply(v));
      const double rhs = dot(op->apply_transpose(w), v);
      EXPECT_LE(std::fabs(lhs - rhs), 1e-10 * norm(v) * norm(w));
    }
  }
}

TEST(LinearMap, RejectsWrongInputLength) {
  const LinearMap op = LinearMap::identity(3);
  EXPECT_THROW((void)op.apply(DenseVector(2)), DimensionError);
  EXPECT_THROW((void)op.apply_transpose(DenseVector(4)), DimensionError);
}

TEST(CgSolveProperty, RandomSpdConvergesWithinDimPlusFive) {
  Gen g(6);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t d = g.index(2, 64);
    const DenseMatrix a = g.spd(d, 0.1, 10.0);
    const DenseVector b = g.vector(d);
    auto r = cg_solve(LinearMap::from_matrix(a), b, 1e-10, d + 5);
    EXPECT_TRUE(r.report.converged) << "d=" << d;
    EXPECT_LE(r.report.final_residual_norm, 1e-8);
    EXPECT_LE(r.report.iterations, d + 5);
  }
}

TEST(NonsymmetricSolversProperty, AgreeWithDenseSolve) {
  Gen g(7);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t d = g.index(2, 32);
    const DenseMatrix a = g.well_conditioned(d);
    const DenseVector b = g.vector(d);
    const DenseVector want = dense_solve(a, b);
    const LinearMap op = LinearMap::from_matrix(a);
    EXPECT_LE(testing::rel_diff(gmres_solve(op, b).x, want), 1e-6);
    EXPECT_LE(testing::rel_diff(gmres_solve(op, b, 1e-10, 0, 3).x, want), 1e-6);
    EXPECT_LE(testing::rel_diff(bicgstab_solve(op, b).x, want), 1e-6);
  }
}

}  // namespace
}  // namespace idiff
