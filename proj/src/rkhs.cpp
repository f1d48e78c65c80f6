#include "idarr/rkhs.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Eigenvalues>

#include "idarr/errors.hpp"
#include "idarr/stopping.hpp"

namespace idarr {

Vector compute_exploration_weights(const LinearMap& map) {
  Vector sums = map.abs_column_sums();
  for (Eigen::Index i = 0; i < sums.size(); ++i) {
    if (!(sums[i] > 0.0)) throw DegenerateColumnError(static_cast<std::size_t>(i));
  }
  return sums / sums.sum();
}

RkhsGeometry::RkhsGeometry(std::shared_ptr<const LinearMap> map,
                           Vector weights)
    : map_(std::move(map)), weights_(std::move(weights)) {
  if (!map_) throw GeometryError("RkhsGeometry: null operator");
  if (weights_.size() != map_->cols()) {
    throw DimensionError("RkhsGeometry: weight count differs from operator cols");
  }
  if (!weights_.allFinite() || (weights_.array() <= 0.0).any()) {
    throw GeometryError("RkhsGeometry: basis weights must be positive");
  }
  inverse_weights_ = weights_.cwiseInverse();
}

RkhsGeometry RkhsGeometry::from_exploration(
    std::shared_ptr<const LinearMap> map) {
  if (!map) throw GeometryError("RkhsGeometry: null operator");
  Vector rho = compute_exploration_weights(*map);
  return RkhsGeometry(std::move(map), std::move(rho));
}

RkhsGeometry RkhsGeometry::with_weights(std::shared_ptr<const LinearMap> map,
                                        Vector weights) {
  return RkhsGeometry(std::move(map), std::move(weights));
}

Vector RkhsGeometry::apply_crkhs_pinv(const Vector& p) const {
  if (p.size() != size()) throw DimensionError("apply_crkhs_pinv: bad length");
  const Vector ap = map_->apply(inverse_weights_.cwiseProduct(p));
  return inverse_weights_.cwiseProduct(map_->apply_adjoint(ap));
}

Matrix SpectralDecomposition::inverse_vectors() const {
  return vectors.transpose() * weights.asDiagonal();
}

SpectralDecomposition generalized_eig(const Matrix& a, const Vector& weights) {
  if (weights.size() != a.cols()) {
    throw DimensionError("generalized_eig: weight count differs from cols");
  }
  if (!weights.allFinite() || (weights.array() <= 0.0).any()) {
    throw GeometryError("generalized_eig: B must be positive definite");
  }
  const Eigen::Index n = a.cols();
  const Vector inv_sqrt = weights.cwiseSqrt().cwiseInverse();
  const Matrix scaled = a * inv_sqrt.asDiagonal();
  Matrix normal = Matrix::Zero(n, n);
  normal.selfadjointView<Eigen::Lower>().rankUpdate(scaled.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> solver(
      normal.selfadjointView<Eigen::Lower>());
  if (solver.info() != Eigen::Success) {
    throw NumericalBreakdownError("generalized_eig: eigensolver failed");
  }

  // Eigen returns ascending order.
  SpectralDecomposition out;
  out.weights = weights;
  out.eigenvalues = solver.eigenvalues().reverse().cwiseMax(0.0);
  out.vectors = inv_sqrt.asDiagonal() * solver.eigenvectors().rowwise().reverse();
  const double cutoff = out.eigenvalues[0] * static_cast<double>(n) *
                        std::numeric_limits<double>::epsilon();
  out.rank = (out.eigenvalues.array() > cutoff).count();
  return out;
}

double rkhs_norm_squared(const SpectralDecomposition& decomp, const Vector& x) {
  const Vector coeff = decomp.vectors.transpose() * decomp.weights.cwiseProduct(x);
  double total = 0.0;
  for (Eigen::Index i = 0; i < decomp.rank; ++i) {
    total += coeff[i] * coeff[i] / decomp.eigenvalues[i];
  }
  return total;
}

Vector dartr_path_point(const SpectralDecomposition& decomp, const Vector& atb,
                        double lambda) {
  const Vector g = decomp.vectors.transpose() * atb;
  Vector c = Vector::Zero(g.size());
  for (Eigen::Index i = 0; i < decomp.rank; ++i) {
    const double l = decomp.eigenvalues[i];
    c[i] = l * g[i] / (l * l + lambda);
  }
  return decomp.vectors * c;
}

namespace {

constexpr double kGridFloor = 1e-14;

// A single distinct positive eigenvalue: every lambda only rescales the
// solution, so the L-curve has no corner.
bool flat_spectrum(const SpectralDecomposition& decomp) {
  return decomp.eigenvalues[decomp.rank - 1] >= (1.0 - 1e-12) * decomp.eigenvalues[0];
}

std::vector<double> lambda_grid(const SpectralDecomposition& decomp) {
  if (decomp.rank == 0) throw NumericalBreakdownError("operator has rank 0");
  const double top = decomp.eigenvalues[0];
  const double bottom = flat_spectrum(decomp)
                            ? kGridFloor * top
                            : std::max(decomp.eigenvalues[decomp.rank - 1], kGridFloor * top);
  std::vector<double> grid(kTikhonovGridSize);
  const double lo = std::log(bottom);
  const double hi = std::log(top);
  for (int i = 0; i < kTikhonovGridSize; ++i) {
    // Decreasing lambda: residual non-increasing along the curve.
    const double t = static_cast<double>(i) / (kTikhonovGridSize - 1);
    grid[static_cast<std::size_t>(i)] = std::exp(hi + t * (lo - hi));
  }
  return grid;
}

}  // namespace

TikhonovResult tikhonov_lcurve(const Matrix& a, const Vector& b,
                               const SpectralDecomposition& decomp,
                               TikhonovPenalty penalty) {
  if (b.size() != a.rows()) throw DimensionError("tikhonov: b has wrong length");
  if (b.cwiseAbs().maxCoeff() == 0.0) throw TrivialDataError("data vector is zero");

  const Vector atb = a.transpose() * b;
  const Vector g = decomp.vectors.transpose() * atb;
  const auto grid = lambda_grid(decomp);

  auto coefficients = [&](double lambda) {
    Vector c = Vector::Zero(g.size());
    for (Eigen::Index i = 0; i < g.size(); ++i) {
      const double l = decomp.eigenvalues[i];
      if (penalty == TikhonovPenalty::Rkhs) {
        if (i < decomp.rank) c[i] = l * g[i] / (l * l + lambda);
      } else {
        c[i] = g[i] / (l + lambda);
      }
    }
    return c;
  };
  auto penalty_of = [&](const Vector& c) {
    if (penalty != TikhonovPenalty::Rkhs) return c.squaredNorm();
    double total = 0.0;
    for (Eigen::Index i = 0; i < decomp.rank; ++i) {
      total += c[i] * c[i] / decomp.eigenvalues[i];
    }
    return total;
  };

  TikhonovResult out;
  std::vector<CurvePoint> curve;
  std::vector<Vector> solutions;
  for (double lambda : grid) {
    const Vector c = coefficients(lambda);
    Vector x = decomp.vectors * c;
    const double res = (a * x - b).squaredNorm();
    const double pen = penalty_of(c);
    out.path.push_back({lambda, res, pen});
    curve.push_back({safe_log(res), safe_log(pen)});
    solutions.push_back(std::move(x));
  }
  // The parameter grid already gives a well-spaced smooth path.
  Corner corner;
  if (flat_spectrum(decomp)) {
    corner.index = grid.size() - 1;
    corner.weak = true;
  } else {
    corner = lcurve_corner(curve, 0.0);
  }
  out.corner_index = corner.index;
  out.weak_corner = corner.weak;
  out.lambda_star = grid[corner.index];
  out.x = std::move(solutions[corner.index]);
  return out;
}

TikhonovResult dartr_solve(const Matrix& a, const Vector& b,
                           const Vector& weights) {
  return tikhonov_lcurve(a, b, generalized_eig(a, weights), TikhonovPenalty::Rkhs);
}

}  // namespace idarr
