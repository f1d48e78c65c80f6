#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>

#include <gtest/gtest.h>

#include "idarr/errors.hpp"
#include "idarr/io.hpp"
#include "idarr/oracles.hpp"
#include "idarr/problems.hpp"
#include "idarr/solver.hpp"

using namespace idarr;
namespace fs = std::filesystem;

namespace {

// Sum of squared residuals of the straight-line fit y ~ c0 + c1 x.
double line_fit_residual(const Vector& x, const Vector& y) {
  Matrix design(x.size(), 2);
  design.col(0).setOnes();
  design.col(1) = x;
  const Vector coef = design.colPivHouseholderQr().solve(y);
  return (design * coef - y).squaredNorm();
}

double total_variation(const Matrix& img) {
  double tv = 0.0;
  for (Eigen::Index i = 0; i < img.rows(); ++i)
    for (Eigen::Index j = 0; j < img.cols(); ++j) {
      if (i + 1 < img.rows()) tv += std::abs(img(i + 1, j) - img(i, j));
      if (j + 1 < img.cols()) tv += std::abs(img(i, j + 1) - img(i, j));
    }
  return tv;
}

TestProblem fredholm_problem(KernelId id, TruthKind truth, Eigen::Index m, Eigen::Index n) {
  const FredholmSetup f = make_fredholm(id, m, n);
  return make_problem(f.map, f.geom, true_solution(truth, f), f.dt);
}

}  // namespace

TEST(Fredholm, SmallGridEntries) {
  const FredholmSetup f = make_fredholm(KernelId::ExpDecay, 4, 2);
  const Matrix& a = f.map->entries();
  ASSERT_EQ(a.rows(), 4);
  ASSERT_EQ(a.cols(), 2);
  const double delta = 2.0;
  for (Eigen::Index j = 0; j < 4; ++j)
    for (Eigen::Index i = 0; i < 2; ++i) {
      const double t = 5.0 * (j + 1) / 4.0;
      const double s = 1.0 + delta * (i + 1);
      EXPECT_NEAR(a(j, i), std::exp(-s * t) / (s * s) * delta, 1e-17);
    }
  EXPECT_DOUBLE_EQ(f.dt, 1.25);
}

TEST(Fredholm, KernelFormulas) {
  const auto exp_k = fredholm_kernel(KernelId::ExpDecay);
  const auto poly_k = fredholm_kernel(KernelId::PolyDecay);
  EXPECT_DOUBLE_EQ(exp_k(0.5, 2.0), std::exp(-1.0) / 4.0);
  EXPECT_DOUBLE_EQ(poly_k(0.5, 2.0), std::abs(std::sin(2.0)) / 2.0);
}

TEST(Fredholm, SpectralDecayShapes) {
  // Exponential decay is a straight line in (i, log sigma); polynomial
  // decay is a straight line in (log i, log sigma).
  auto fits = [](KernelId id, Eigen::Index count) {
    const FredholmSetup f = make_fredholm(id, 500, 100);
    const Vector sv = Eigen::JacobiSVD<Matrix>(f.map->entries()).singularValues();
    const Vector y = (sv.head(count) / sv(0)).array().log();
    const Vector i = Vector::LinSpaced(count, 1.0, static_cast<double>(count));
    return std::pair{line_fit_residual(i, y), line_fit_residual(i.array().log(), y)};
  };
  // Stay above the rounding floor (about 1e-16 sigma_1) for ExpDecay.
  const auto [exp_lin, exp_log] = fits(KernelId::ExpDecay, 14);
  EXPECT_LT(exp_lin, exp_log);
  const auto [poly_lin, poly_log] = fits(KernelId::PolyDecay, 100);
  EXPECT_LT(poly_log, poly_lin);
}

TEST(Fredholm, WeightsAreNormalizedColumnSums) {
  for (KernelId id : {KernelId::ExpDecay, KernelId::PolyDecay}) {
    const FredholmSetup f = make_fredholm(id, 120, 40);
    const Vector sums = f.map->entries().cwiseAbs().colwise().sum().transpose();
    EXPECT_LT((f.geom.weights() - sums / sums.sum()).cwiseAbs().maxCoeff(), 1e-14);
  }
}

TEST(Fredholm, TooSmallRejected) {
  EXPECT_THROW(make_fredholm(KernelId::ExpDecay, 10, 1), DimensionError);
}

TEST(TrueSolution, InFsoiIsSecondEigenvector) {
  const FredholmSetup f = make_fredholm(KernelId::PolyDecay, 200, 50);
  const Vector x = true_solution(TruthKind::InFsoi, f);
  const Matrix& a = f.map->entries();
  EXPECT_NEAR(l2rho_norm(f.geom, x), 1.0, 1e-12);
  const auto d = generalized_eig(a, f.geom.weights());
  const Vector lhs = a.transpose() * (a * x);
  const Vector rhs = d.eigenvalues(1) * f.geom.weights().cwiseProduct(x);
  EXPECT_LT((lhs - rhs).norm(), 1e-8 * lhs.norm());
  Eigen::Index arg;
  x.cwiseAbs().maxCoeff(&arg);
  EXPECT_GT(x(arg), 0.0);
}

TEST(TrueSolution, InFsoiLiesInRangeOfCrkhs) {
  const FredholmSetup f = make_fredholm(KernelId::ExpDecay, 200, 50);
  const Vector x = true_solution(TruthKind::InFsoi, f);
  const Matrix basis = oracle::crkhs_range_basis(f.map->entries(), f.geom.weights());
  EXPECT_LT((x - basis * (basis.transpose() * x)).norm(), 1e-8 * x.norm());
}

TEST(TrueSolution, OutFsoiIsSquareOfGrid) {
  const FredholmSetup f = make_fredholm(KernelId::ExpDecay, 500, 100);
  const Vector x = true_solution(TruthKind::OutFsoi, f);
  EXPECT_NEAR(f.s_grid(0), 1.04, 1e-15);
  EXPECT_NEAR(f.s_grid(99), 5.0, 1e-15);
  for (Eigen::Index i = 0; i < 100; ++i) EXPECT_DOUBLE_EQ(x(i), f.s_grid(i) * f.s_grid(i));
}

TEST(TrueSolution, NeedsTwoUnknowns) {
  auto map = std::make_shared<DenseMap>(Matrix::Ones(3, 1));
  FredholmSetup f{map, RkhsGeometry::from_exploration(map), Vector::Ones(1), 1.0};
  EXPECT_THROW(true_solution(TruthKind::InFsoi, f), DimensionError);
}

// Identifiability on the numerically resolved part of range(C_rkhs) =
// B^-1 range(A^T): right singular vectors with sigma >= sqrt(eps) sigma_1.
// Deeper directions only amplify the rounding in b_clean.
TEST(TrueSolution, NoiselessInFsoiIsIdentifiable) {
  for (KernelId id : {KernelId::ExpDecay, KernelId::PolyDecay}) {
    const TestProblem p = fredholm_problem(id, TruthKind::InFsoi, 500, 100);
    const Matrix& a = *p.map->dense();
    Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeThinV);
    const Vector& sv = svd.singularValues();
    Eigen::Index r = 0;
    while (r < sv.size() && sv(r) >= std::sqrt(2.2e-16) * sv(0)) ++r;
    const Matrix basis =
        (p.geom.inverse_weights().asDiagonal() * svd.matrixV().leftCols(r)).householderQr().householderQ() *
        Matrix::Identity(a.cols(), r);
    const Vector y = (a * basis).colPivHouseholderQr().solve(p.b_clean);
    const Vector x = basis * y;
    EXPECT_LT((x - p.x_true).norm(), 1e-6 * p.x_true.norm()) << static_cast<int>(id);
  }

  const TestProblem poly = fredholm_problem(KernelId::PolyDecay, TruthKind::InFsoi, 500, 100);
  const Vector x = oracle::restricted_least_squares(*poly.map->dense(), poly.geom.weights(), poly.b_clean);
  EXPECT_LT((x - poly.x_true).norm(), 1e-6 * poly.x_true.norm());
}

TEST(Noise, ZeroNsrKeepsDataExact) {
  const TestProblem clean = fredholm_problem(KernelId::ExpDecay, TruthKind::InFsoi, 50, 10);
  const TestProblem p = add_noise(clean, 0.0, 3);
  EXPECT_EQ(p.b, p.b_clean);
  EXPECT_EQ(p.sigma, 0.0);
}

TEST(Noise, ReproducibleAndSeedDependent) {
  const TestProblem clean = fredholm_problem(KernelId::ExpDecay, TruthKind::InFsoi, 50, 10);
  const TestProblem a = add_noise(clean, 0.5, 9);
  const TestProblem b = add_noise(clean, 0.5, 9);
  const TestProblem c = add_noise(clean, 0.5, 10);
  EXPECT_EQ(a.b, b.b);
  EXPECT_NE(a.b, c.b);
  EXPECT_EQ(a.seed, 9u);
  EXPECT_DOUBLE_EQ(a.sigma, 0.5 * clean.b_clean.norm());
  const Vector expected = clean.b_clean + a.sigma * std::sqrt(a.dt) * standard_normal(50, 9);
  EXPECT_EQ(a.b, expected);
}

// ||w||^2 / (sigma^2 dt) is chi-squared with m degrees of freedom; the mean
// of 200 replicas has standard deviation sqrt(2m/200).
TEST(Noise, ChiSquaredLaw) {
  const Eigen::Index m = 120;
  const TestProblem clean = fredholm_problem(KernelId::PolyDecay, TruthKind::OutFsoi, m, 20);
  double sum = 0.0;
  const int replicas = 200;
  for (int r = 0; r < replicas; ++r) {
    const TestProblem p = add_noise(clean, 0.25, 1000 + r);
    sum += (p.b - p.b_clean).squaredNorm() / (p.sigma * p.sigma * p.dt);
  }
  const double mean = sum / replicas;
  EXPECT_NEAR(mean, static_cast<double>(m), 3.0 * std::sqrt(2.0 * m / replicas));
}

TEST(Noise, StandardNormalMoments) {
  const Vector g = standard_normal(20000, 4);
  const double mean = g.mean();
  const double var = (g.array() - mean).square().sum() / (g.size() - 1);
  EXPECT_NEAR(mean, 0.0, 4.0 / std::sqrt(20000.0));
  EXPECT_NEAR(var, 1.0, 4.0 * std::sqrt(2.0 / 20000.0));
}

TEST(Errors, L2rhoError) {
  const TestProblem p = fredholm_problem(KernelId::ExpDecay, TruthKind::InFsoi, 50, 10);
  EXPECT_EQ(l2rho_error(p.geom, p.x_true, p.x_true), 0.0);
  const Vector d = Vector::Ones(10);
  EXPECT_NEAR(l2rho_error(p.geom, p.x_true + d, p.x_true), std::sqrt(p.geom.weights().sum()),
              1e-14);
  EXPECT_THROW(l2rho_error(p.geom, Vector::Ones(3), p.x_true), DimensionError);
}

TEST(Images, VectorRoundTrip) {
  const Matrix img = oracle::random_matrix(6, 6, 5);
  const Vector v = image_to_vector(img);
  EXPECT_EQ(v(1), img(0, 1));
  EXPECT_EQ(v(6), img(1, 0));
  EXPECT_EQ(vector_to_image(v, 6), img);
  EXPECT_THROW(vector_to_image(v, 5), DimensionError);
}

TEST(Images, PhantomAndCheckerboardRange) {
  const Matrix ph = phantom_image(64);
  EXPECT_GE(ph.minCoeff(), 0.0);
  EXPECT_LE(ph.maxCoeff(), 1.0);
  EXPECT_GT(ph.maxCoeff(), 0.5);
  const Matrix cb = checkerboard_image(64, 8);
  EXPECT_EQ(cb(0, 0) + cb(0, 8), 1.0);
  EXPECT_EQ(cb(0, 0), cb(8, 8));
  EXPECT_THROW(phantom_image(4), DimensionError);
}

TEST(Deblur, DeltaPsfReturnsImage) {
  const Matrix img = phantom_image(16);
  const TestProblem p = make_deblur(img, Matrix::Ones(1, 1), 0.0, 1);
  EXPECT_EQ(p.b, image_to_vector(img));
  EXPECT_EQ(p.x_true, image_to_vector(img));
  EXPECT_DOUBLE_EQ(p.dt, 1.0 / 256.0);
}

TEST(Deblur, GaussianBlurReducesTotalVariation) {
  const Matrix img = checkerboard_image(64, 8);
  const TestProblem p = make_deblur(img, gaussian_psf(2.0), 0.0, 1);
  EXPECT_LT(total_variation(vector_to_image(p.b, 64)), total_variation(img));
}

TEST(Deblur, NoiseLevelMatchesNsr) {
  const TestProblem p = make_deblur(phantom_image(64), gaussian_psf(2.0), 0.05, 3);
  const double ratio = (p.b - p.b_clean).norm() / p.b_clean.norm();
  // ||noise||^2 / (sigma^2 / N^2) ~ chi^2 with N^2 = 4096 degrees of freedom.
  EXPECT_NEAR(ratio, 0.05, 0.05 * 4.0 / std::sqrt(2.0 * 4096));
}

TEST(Deblur, RejectsBadImages) {
  EXPECT_THROW(make_deblur(Matrix::Zero(8, 9), gaussian_psf(1.0), 0.0, 1), DimensionError);
  EXPECT_THROW(make_deblur(Matrix::Zero(4, 4), gaussian_psf(1.0), 0.0, 1), DimensionError);
  EXPECT_THROW(make_deblur("/nonexistent/image.pgm", PsfSpec{}, 0.01, 1), IoError);
}

TEST(Deblur, PsfFromFileIsNormalized) {
  const fs::path dir = fs::temp_directory_path() / "idarr_psf_test";
  fs::create_directories(dir);
  {
    std::ofstream out(dir / "psf.txt");
    out << "0 1 0\n1 4 1\n0 1 0\n";
  }
  PsfSpec spec;
  spec.kind = PsfSpec::Kind::FromFile;
  spec.path = (dir / "psf.txt").string();
  const Matrix psf = make_psf(spec);
  EXPECT_NEAR(psf.sum(), 1.0, 1e-15);
  EXPECT_DOUBLE_EQ(psf(1, 1), 0.5);

  PsfSpec missing = spec;
  missing.path = (dir / "absent.txt").string();
  EXPECT_THROW(make_psf(missing), IoError);

  PsfSpec delta;
  delta.kind = PsfSpec::Kind::Delta;
  EXPECT_EQ(make_psf(delta), Matrix::Ones(1, 1));
  fs::remove_all(dir);
}

TEST(Deblur, BundledPhantomSolvesQuickly) {
  const char* data = std::getenv("IDARR_DATA_DIR");
  if (!data) GTEST_SKIP() << "IDARR_DATA_DIR not set";
  const fs::path image = fs::path(data) / "phantom64.pgm";
  PsfSpec psf;
  psf.width = 2.0;
  const TestProblem p = make_deblur(image.string(), psf, 0.01, 1);
  const SolveResult r = idarr_solve(p.geom, p.b, LCurveRule{});
  EXPECT_GE(r.k_stop, 1);
  const double rel = (r.x - p.x_true).norm() / p.x_true.norm();
  // x = 0 has relative error 1.
  EXPECT_LT(rel, 1.0);
  EXPECT_LT(r.history.back().wall_ms, 60000.0);
}
