#include <cmath>
#include <memory>

#include <gtest/gtest.h>

#include "idarr/errors.hpp"
#include "idarr/oracles.hpp"
#include "idarr/problems.hpp"
#include "idarr/rkhs.hpp"

using namespace idarr;

namespace {

std::shared_ptr<const LinearMap> dense(const Matrix& a) {
  return std::make_shared<DenseMap>(a);
}

Matrix diag2(double a, double b) {
  Matrix m = Matrix::Zero(2, 2);
  m(0, 0) = a;
  m(1, 1) = b;
  return m;
}

Vector vec(std::initializer_list<double> values) {
  Vector v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v(i++) = x;
  return v;
}

}  // namespace

TEST(ExplorationWeights, TwoByTwo) {
  Matrix a(2, 2);
  a << 1, 2, 3, 4;
  const Vector rho = compute_exploration_weights(DenseMap(a));
  EXPECT_NEAR(rho(0), 0.4, 1e-15);
  EXPECT_NEAR(rho(1), 0.6, 1e-15);
}

TEST(ExplorationWeights, IdentityIsUniform) {
  const Vector rho = compute_exploration_weights(DenseMap(Matrix::Identity(4, 4)));
  for (Eigen::Index i = 0; i < 4; ++i) EXPECT_DOUBLE_EQ(rho(i), 0.25);
}

TEST(ExplorationWeights, ZeroColumnIsReported) {
  Matrix a = Matrix::Ones(3, 3);
  a.col(1).setZero();
  try {
    compute_exploration_weights(DenseMap(a));
    FAIL() << "expected DegenerateColumnError";
  } catch (const DegenerateColumnError& e) {
    EXPECT_EQ(e.column(), 1u);
  }
}

TEST(ExplorationWeights, FredholmMatchesColumnSums) {
  const FredholmSetup f = make_fredholm(KernelId::ExpDecay, 500, 100);
  const Matrix& a = f.map->entries();
  const Vector sums = a.cwiseAbs().colwise().sum().transpose();
  const Vector expected = sums / sums.sum();
  EXPECT_TRUE((f.geom.weights().array() > 0).all());
  EXPECT_NEAR(f.geom.weights().sum(), 1.0, 1e-14);
  EXPECT_LT((f.geom.weights() - expected).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(CrkhsPinv, DiagonalExamples) {
  auto g1 = RkhsGeometry::with_weights(dense(diag2(2, 0)), Vector::Ones(2));
  const Vector s1 = g1.apply_crkhs_pinv(vec({1, 1}));
  EXPECT_DOUBLE_EQ(s1(0), 4.0);
  EXPECT_DOUBLE_EQ(s1(1), 0.0);

  auto g2 = RkhsGeometry::with_weights(dense(Matrix::Identity(2, 2)), vec({0.5, 0.5}));
  const Vector s2 = g2.apply_crkhs_pinv(vec({1, 0}));
  EXPECT_DOUBLE_EQ(s2(0), 4.0);
  EXPECT_DOUBLE_EQ(s2(1), 0.0);
}

TEST(CrkhsPinv, MatchesDenseFormula) {
  const Matrix a = oracle::random_matrix(15, 8, 21);
  auto geom = RkhsGeometry::from_exploration(dense(a));
  const Matrix binv = geom.inverse_weights().asDiagonal();
  const Matrix c = binv * a.transpose() * a * binv;
  const Vector p = oracle::random_matrix(8, 1, 22).col(0);
  EXPECT_LT((geom.apply_crkhs_pinv(p) - c * p).norm(), 1e-12 * (c * p).norm());
}

TEST(RkhsGeometry, RejectsBadWeights) {
  EXPECT_THROW(RkhsGeometry::with_weights(dense(Matrix::Identity(2, 2)), vec({1, 0})),
               GeometryError);
  EXPECT_THROW(RkhsGeometry::with_weights(dense(Matrix::Identity(2, 2)), vec({1, 1, 1})),
               DimensionError);
}

TEST(GeneralizedEig, IdentityCase) {
  const auto d = generalized_eig(Matrix::Identity(2, 2), Vector::Ones(2));
  EXPECT_NEAR(d.eigenvalues(0), 1.0, 1e-15);
  EXPECT_NEAR(d.eigenvalues(1), 1.0, 1e-15);
  EXPECT_LT((d.vectors.transpose() * d.vectors - Matrix::Identity(2, 2)).norm(), 1e-14);
  EXPECT_EQ(d.rank, 2);
}

TEST(GeneralizedEig, DiagonalCase) {
  const auto d = generalized_eig(diag2(2, 1), Vector::Ones(2));
  EXPECT_NEAR(d.eigenvalues(0), 4.0, 1e-14);
  EXPECT_NEAR(d.eigenvalues(1), 1.0, 1e-14);
  EXPECT_LT((d.vectors.cwiseAbs() - Matrix::Identity(2, 2)).norm(), 1e-14);
}

TEST(GeneralizedEig, WeightedDiagonalCase) {
  const auto d = generalized_eig(diag2(2, 1), vec({4, 1}));
  EXPECT_NEAR(d.eigenvalues(0), 1.0, 1e-14);
  EXPECT_NEAR(d.eigenvalues(1), 1.0, 1e-14);
  // The eigenvalue is repeated, so V is only fixed up to a B-orthogonal
  // rotation; V^T B V = I and A^T A V = B V pin that down.
  const Matrix b = vec({4, 1}).asDiagonal();
  EXPECT_LT((d.vectors.transpose() * b * d.vectors - Matrix::Identity(2, 2)).norm(), 1e-14);
  EXPECT_LT((diag2(4, 1) * d.vectors - b * d.vectors).norm(), 1e-14);
}

TEST(GeneralizedEig, RejectsNonPositiveWeight) {
  EXPECT_THROW(generalized_eig(Matrix::Identity(2, 2), vec({1, -1})), GeometryError);
}

TEST(GeneralizedEig, DefiningIdentitiesOnRandomInstances) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const Matrix a = oracle::random_matrix(30, 12, seed);
    const Vector w = compute_exploration_weights(DenseMap(a));
    const auto d = generalized_eig(a, w);
    const Matrix b = w.asDiagonal();
    const Matrix lhs = a.transpose() * a * d.vectors;
    const Matrix rhs = b * d.vectors * d.eigenvalues.asDiagonal();
    EXPECT_LT((lhs - rhs).norm() / lhs.norm(), 1e-8);
    EXPECT_LT((d.vectors.transpose() * b * d.vectors - Matrix::Identity(12, 12)).norm(), 1e-8);
    for (Eigen::Index i = 1; i < 12; ++i) EXPECT_GE(d.eigenvalues(i - 1), d.eigenvalues(i));
    EXPECT_GE(d.eigenvalues(11), 0.0);
    EXPECT_LT((d.inverse_vectors() * d.vectors - Matrix::Identity(12, 12)).norm(), 1e-8);
  }
}

TEST(GeneralizedEig, RankOfDeficientOperator) {
  const Matrix a = oracle::random_low_rank(20, 10, 4, 5);
  const auto d = generalized_eig(a, compute_exploration_weights(DenseMap(a)));
  EXPECT_EQ(d.rank, 4);
}

TEST(RkhsNorm, DiagonalExample) {
  const auto d = generalized_eig(diag2(2, 1), Vector::Ones(2));
  EXPECT_NEAR(rkhs_norm_squared(d, vec({1, 0})), 0.25, 1e-15);
  EXPECT_EQ(rkhs_norm_squared(d, Vector::Zero(2)), 0.0);
}

// On range(C_rkhs) the norm is x^T (C_rkhs^+)^+ x; check against a dense
// pseudo-inverse of B^-1 A^T A B^-1.
TEST(RkhsNorm, MatchesDensePseudoInverse) {
  const Matrix a = oracle::random_low_rank(18, 9, 6, 8);
  const Vector w = compute_exploration_weights(DenseMap(a));
  const auto d = generalized_eig(a, w);
  const Matrix binv = w.cwiseInverse().asDiagonal();
  const Matrix cpinv = binv * a.transpose() * a * binv;
  const Matrix c = cpinv.completeOrthogonalDecomposition().pseudoInverse();
  const Matrix basis = oracle::crkhs_range_basis(a, w);
  const Vector x = basis * oracle::random_matrix(basis.cols(), 1, 9).col(0);
  const double direct = x.dot(c * x);
  EXPECT_NEAR(rkhs_norm_squared(d, x), direct, 1e-8 * direct);
}

TEST(Dartr, DiagonalPathPoint) {
  const auto d = generalized_eig(diag2(2, 1), Vector::Ones(2));
  const Vector atb = diag2(2, 1).transpose() * vec({1, 0});
  for (double lambda : {1e-3, 0.5, 4.0, 100.0}) {
    const Vector x = dartr_path_point(d, atb, lambda);
    EXPECT_NEAR(x(0), 8.0 / (16.0 + lambda), 1e-13);
    EXPECT_NEAR(x(1), 0.0, 1e-15);
  }
}

TEST(Dartr, IdentityRecoversData) {
  const auto r = dartr_solve(Matrix::Identity(2, 2), vec({1, 1}), Vector::Ones(2));
  EXPECT_LT((r.x - vec({1, 1})).norm(), 1e-3);
  EXPECT_GT(r.lambda_star, 0.0);
}

TEST(Dartr, ZeroDataRejected) {
  EXPECT_THROW(dartr_solve(Matrix::Identity(2, 2), Vector::Zero(2), Vector::Ones(2)),
               TrivialDataError);
}

TEST(Dartr, PathOrderedAndMonotone) {
  const FredholmSetup f = make_fredholm(KernelId::PolyDecay, 60, 20);
  const TestProblem clean =
      make_problem(f.map, f.geom, true_solution(TruthKind::InFsoi, f), f.dt);
  const TestProblem p = add_noise(clean, 0.1, 3);
  const auto r = dartr_solve(f.map->entries(), p.b, f.geom.weights());
  ASSERT_EQ(static_cast<int>(r.path.size()), kTikhonovGridSize);
  for (std::size_t i = 1; i < r.path.size(); ++i) {
    EXPECT_LT(r.path[i].lambda, r.path[i - 1].lambda);
    // Smaller lambda fits better and pays a larger penalty.
    EXPECT_LE(r.path[i].residual_sq, r.path[i - 1].residual_sq * (1 + 1e-10));
    EXPECT_GE(r.path[i].penalty, r.path[i - 1].penalty * (1 - 1e-10));
  }
  EXPECT_EQ(r.lambda_star, r.path[r.corner_index].lambda);
}

TEST(Tikhonov, EuclideanMatchesNormalEquations) {
  const Matrix a = oracle::random_matrix(25, 10, 31);
  const Vector b = oracle::random_matrix(25, 1, 32).col(0);
  const auto d = generalized_eig(a, Vector::Ones(10));
  const auto r = tikhonov_lcurve(a, b, d, TikhonovPenalty::Euclidean);
  const Matrix normal = a.transpose() * a + r.lambda_star * Matrix::Identity(10, 10);
  const Vector x = normal.ldlt().solve(a.transpose() * b);
  EXPECT_LT((r.x - x).norm(), 1e-9 * x.norm());
}

TEST(Tikhonov, WeightedMatchesNormalEquations) {
  const Matrix a = oracle::random_matrix(25, 10, 33);
  const Vector b = oracle::random_matrix(25, 1, 34).col(0);
  const Vector w = compute_exploration_weights(DenseMap(a));
  const auto d = generalized_eig(a, w);
  const auto r = tikhonov_lcurve(a, b, d, TikhonovPenalty::Weighted);
  const Matrix normal = a.transpose() * a + r.lambda_star * Matrix(w.asDiagonal());
  const Vector x = normal.ldlt().solve(a.transpose() * b);
  EXPECT_LT((r.x - x).norm(), 1e-9 * x.norm());
}
