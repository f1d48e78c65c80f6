#include "idarr/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>

#include "idarr/errors.hpp"
#include "idarr/problems.hpp"
#include "idarr/solver.hpp"

namespace idarr::oracle {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

Eigen::Index rank_from(const Vector& sv, Eigen::Index m, Eigen::Index n) {
  if (sv.size() == 0 || sv[0] == 0.0) return 0;
  const double cutoff = sv[0] * static_cast<double>(std::max(m, n)) * kEps;
  return (sv.array() > cutoff).count();
}

Matrix thin_q(const Matrix& w) {
  Eigen::HouseholderQR<Matrix> qr(w);
  return qr.householderQ() * Matrix::Identity(w.rows(), w.cols());
}

Matrix stack_basis(const std::vector<Vector>& vs, std::size_t k) {
  Matrix z(vs.at(0).size(), static_cast<Eigen::Index>(k));
  for (std::size_t j = 0; j < k; ++j) z.col(static_cast<Eigen::Index>(j)) = vs.at(j);
  return z;
}

double max_offdiag_identity(const Matrix& g) {
  return (g - Matrix::Identity(g.rows(), g.cols())).cwiseAbs().maxCoeff();
}

}  // namespace

Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  const Vector g = standard_normal(rows * cols, seed);
  return Eigen::Map<const Matrix>(g.data(), rows, cols);
}

Matrix random_low_rank(Eigen::Index m, Eigen::Index n, Eigen::Index rank,
                       std::uint64_t seed) {
  return random_matrix(m, rank, seed) * random_matrix(rank, n, seed + 0x9e3779b97f4a7c15ULL);
}

Eigen::Index svd_rank(const Matrix& a) {
  Eigen::JacobiSVD<Matrix> svd(a);
  return rank_from(svd.singularValues(), a.rows(), a.cols());
}

Matrix crkhs_range_basis(const Matrix& a, const Vector& weights) {
  Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeThinV);
  const Eigen::Index r = rank_from(svd.singularValues(), a.rows(), a.cols());
  if (r == 0) return Matrix(a.cols(), 0);
  const Matrix w = weights.cwiseInverse().asDiagonal() * svd.matrixV().leftCols(r);
  return thin_q(w);
}

Vector restricted_least_squares(const Matrix& a, const Vector& weights,
                                const Vector& b) {
  const Matrix q = crkhs_range_basis(a, weights);
  if (q.cols() == 0) return Vector::Zero(a.cols());
  const Matrix aq = a * q;
  const Vector y = aq.colPivHouseholderQr().solve(b);
  return q * y;
}

double restricted_gradient_norm(const Matrix& a, const Vector& weights,
                                const Vector& x, const Vector& b) {
  const Matrix q = crkhs_range_basis(a, weights);
  return (q.transpose() * (a.transpose() * (a * x - b))).norm();
}

int distinct_projection_count(const Matrix& a, const Vector& weights,
                              const Vector& b, double cluster_tol,
                              double projection_tol) {
  // A C^+ A^T = K^2 with K = A B^-1 A^T, so both share eigenvectors and
  // the distinct eigenvalues correspond one to one.
  const Matrix k = a * weights.cwiseInverse().asDiagonal() * a.transpose();
  Eigen::SelfAdjointEigenSolver<Matrix> eig(k);
  const Vector mu = eig.eigenvalues().reverse();
  const Matrix q = eig.eigenvectors().rowwise().reverse();
  if (mu.size() == 0 || mu[0] <= 0.0) return 0;
  const double positive = mu[0] * static_cast<double>(k.rows()) * kEps * 10.0;
  const double bnorm = b.norm();

  int count = 0;
  Eigen::Index start = 0;
  while (start < mu.size() && mu[start] > positive) {
    Eigen::Index end = start + 1;
    while (end < mu.size() && mu[end] > positive &&
           mu[end - 1] - mu[end] <= cluster_tol * mu[0]) {
      ++end;
    }
    const double proj = (q.middleCols(start, end - start).transpose() * b).norm();
    if (proj > projection_tol * bnorm) ++count;
    start = end;
  }
  return count;
}

Vector bidiagonal_solution(const BidiagFactors& f, int k) {
  if (k < 1 || static_cast<std::size_t>(k) > f.z.size() ||
      f.betas.size() < static_cast<std::size_t>(k + 1)) {
    throw UsageError("bidiagonal_solution: basis too short for k");
  }
  Matrix bk = Matrix::Zero(k + 1, k);
  for (int i = 0; i < k; ++i) {
    bk(i, i) = f.alphas[static_cast<std::size_t>(i)];
    bk(i + 1, i) = f.betas[static_cast<std::size_t>(i + 1)];
  }
  Vector rhs = Vector::Zero(k + 1);
  rhs[0] = f.betas[0];
  const Vector y = bk.colPivHouseholderQr().solve(rhs);
  return stack_basis(f.z, static_cast<std::size_t>(k)) * y;
}

std::vector<Vector> split_preconditioned_lsqr(const Matrix& a, const Vector& weights,
                                              const Vector& b, int k) {
  const Vector d = weights.cwiseSqrt().cwiseInverse();
  const Matrix at = a * d.asDiagonal();
  std::vector<Vector> iterates;

  double beta = b.norm();
  if (beta == 0.0) return iterates;
  Vector u = b / beta;
  Vector v = at.transpose() * u;
  double alpha = v.norm();
  if (alpha == 0.0) return iterates;
  v /= alpha;
  Vector w = v;
  Vector y = Vector::Zero(a.cols());
  double phi_bar = beta;
  double rho_bar = alpha;

  for (int i = 0; i < k; ++i) {
    u = at * v - alpha * u;
    beta = u.norm();
    if (beta > 0.0) {
      u /= beta;
      v = at.transpose() * u - beta * v;
      alpha = v.norm();
      if (alpha > 0.0) v /= alpha;
    } else {
      alpha = 0.0;
    }
    const double rho = std::hypot(rho_bar, beta);
    const double c = rho_bar / rho;
    const double s = beta / rho;
    const double theta = s * alpha;
    rho_bar = -c * alpha;
    const double phi = c * phi_bar;
    phi_bar = s * phi_bar;
    y += (phi / rho) * w;
    w = v - (theta / rho) * w;
    iterates.push_back(d.cwiseProduct(y));
    if (alpha == 0.0 || beta == 0.0) break;
  }
  return iterates;
}

Vector mixed_basis_solution(const Matrix& a, const Matrix& z, const Vector& b,
                            std::uint64_t seed) {
  const Eigen::Index k = z.cols();
  const Matrix r = random_matrix(k, k, seed) + 2.0 * std::sqrt(static_cast<double>(k)) *
                                                    Matrix::Identity(k, k);
  const Matrix zr = z * r;
  const Vector y = (a * zr).colPivHouseholderQr().solve(b);
  return zr * y;
}

Eigen::Index krylov_span_excess(const Matrix& a, const Vector& weights,
                                const Vector& b, const Matrix& z) {
  const Eigen::Index k = z.cols();
  const Vector winv = weights.cwiseInverse();
  auto cpinv = [&](const Vector& p) {
    return Vector(winv.cwiseProduct(a.transpose() * (a * winv.cwiseProduct(p))));
  };
  Matrix kry(a.cols(), k);
  Vector v = cpinv(a.transpose() * b);
  for (Eigen::Index j = 0; j < k; ++j) {
    for (Eigen::Index i = 0; i < j; ++i) v -= kry.col(i).dot(v) * kry.col(i);
    kry.col(j) = v / v.norm();
    v = cpinv(a.transpose() * (a * kry.col(j)));
  }
  Matrix both(a.cols(), 2 * k);
  both << thin_q(z), kry;
  Eigen::JacobiSVD<Matrix> svd(both);
  const Vector sv = svd.singularValues();
  const Eigen::Index r = (sv.array() > 1e-6 * sv[0]).count();
  return r - k;
}

std::vector<PropertyResult> property_battery(Eigen::Index m, Eigen::Index n,
                                             Eigen::Index rank, std::uint64_t seed) {
  if (m < 2 || n < 2 || m > 200 || n > 200) {
    throw UsageError("property battery needs 2 <= m, n <= 200");
  }
  const Eigen::Index full = std::min(m, n);
  if (rank < 1 || rank > full) rank = full;
  const Matrix a = rank < full ? random_low_rank(m, n, rank, seed) : random_matrix(m, n, seed);
  const Vector b = standard_normal(m, seed + 1);
  auto map = std::make_shared<const DenseMap>(a);
  const auto geom = RkhsGeometry::from_exploration(map);
  const Vector& w = geom.weights();
  const double bnorm = b.norm();

  std::vector<PropertyResult> out;
  const auto f = run_ggkb(SolutionNorm::rkhs(geom), b, static_cast<int>(n) + 1, true);
  const auto kt = static_cast<std::size_t>(f.k_t < 0 ? f.steps : f.k_t);
  if (kt == 0) throw NumericalBreakdownError("property battery: k_t = 0");

  const Matrix u = stack_basis(f.u, kt);
  const Matrix z = stack_basis(f.z, kt);
  const Matrix zbar = stack_basis(f.zbar, kt);
  out.push_back({"orthogonality U^T U = I", max_offdiag_identity(u.transpose() * u), 1e-10});
  out.push_back({"orthogonality Z^T Zbar = I", max_offdiag_identity(z.transpose() * zbar), 1e-10});

  if (f.u.size() >= kt + 1 || f.terminated) {
    const std::size_t ucols = std::min(f.u.size(), kt + 1);
    Matrix bk = Matrix::Zero(static_cast<Eigen::Index>(ucols), static_cast<Eigen::Index>(kt));
    for (std::size_t i = 0; i < kt; ++i) {
      bk(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = f.alphas[i];
      if (i + 1 < ucols) {
        bk(static_cast<Eigen::Index>(i + 1), static_cast<Eigen::Index>(i)) = f.betas[i + 1];
      }
    }
    const double dev = (a * z - stack_basis(f.u, ucols) * bk).cwiseAbs().maxCoeff() /
                       a.cwiseAbs().maxCoeff();
    out.push_back({"bidiagonal identity A Z = U B", dev, 1e-10});
  }

  const int q = distinct_projection_count(a, w, b);
  const Eigen::Index r = svd_rank(a);
  out.push_back({"k_t equals distinct projection count",
                 std::abs(static_cast<double>(kt) - q), 0.0});
  out.push_back({"k_t <= rank(A)", std::max(0.0, static_cast<double>(kt) - static_cast<double>(r)), 0.0});

  const Matrix qc = crkhs_range_basis(a, w);
  out.push_back({"z_i in range(C_rkhs)",
                 (z - qc * (qc.transpose() * z)).norm() / z.norm(), 1e-8});

  SolveOptions opts;
  opts.reorthogonalize = true;
  double residual_dev = 0.0;
  opts.observer = [&](const Vector& x, const IterationRecord& rec) {
    residual_dev = std::max(residual_dev, std::abs(rec.residual - (a * x - b).norm()) / bnorm);
  };
  const auto terminal = idarr_solve(geom, b, FixedIterations{static_cast<int>(n) + 1}, opts);
  out.push_back({"residual identity", residual_dev, 1e-9});

  const Vector x_oracle = restricted_least_squares(a, w, b);
  out.push_back({"terminal solution", (terminal.x - x_oracle).norm() / x_oracle.norm(), 1e-6});
  out.push_back({"terminal normal equations",
                 restricted_gradient_norm(a, w, terminal.x, b) /
                     (a.norm() * a.norm() * x_oracle.norm() + a.norm() * bnorm),
                 1e-8});

  const int k = std::max(1, std::min<int>(5, static_cast<int>(kt) - 1));
  opts.observer = nullptr;
  const auto early = idarr_solve(geom, b, FixedIterations{k}, opts);
  const Vector mixed = mixed_basis_solution(a, z.leftCols(k), b, seed + 2);
  out.push_back({"uniqueness under basis change",
                 (early.x - mixed).norm() / std::max(mixed.norm(), 1e-300), 1e-8});
  return out;
}

Matrix separable_blur_factor(Eigen::Index side, const Matrix& psf) {
  if (psf.rows() != psf.cols() || psf.rows() % 2 == 0) {
    throw GeometryError("separable_blur_factor: PSF must be square with odd size");
  }
  const Vector g = psf.rowwise().sum();
  const double total = g.sum();
  if (!(total > 0.0)) throw GeometryError("separable_blur_factor: PSF sums to zero");
  if ((psf - g * g.transpose() / total).cwiseAbs().maxCoeff() > 1e-14 * psf.cwiseAbs().maxCoeff()) {
    throw GeometryError("separable_blur_factor: PSF is not separable");
  }
  const Vector g1 = g / std::sqrt(total);
  const Eigen::Index c = psf.rows() / 2;
  Matrix a1 = Matrix::Zero(side, side);
  for (Eigen::Index i = 0; i < side; ++i) {
    for (Eigen::Index j = 0; j < side; ++j) {
      const Eigen::Index p = c + i - j;
      if (p >= 0 && p < g1.size()) a1(i, j) = g1[p];
    }
  }
  return a1;
}

Vector separable_naive_solution(const Matrix& a1, const Vector& b, double rel_tol) {
  const Eigen::Index n = a1.rows();
  if (a1.cols() != n || b.size() != n * n) {
    throw DimensionError("separable_naive_solution: sizes do not match");
  }
  const Vector rho = a1.cwiseAbs().colwise().sum().transpose();
  if ((rho.array() <= 0.0).any()) throw DegenerateColumnError(0);
  const Matrix k1 = a1 * rho.cwiseInverse().asDiagonal() * a1.transpose();
  Eigen::SelfAdjointEigenSolver<Matrix> eig(k1);
  const Matrix& q = eig.eigenvectors();
  const Vector& lam = eig.eigenvalues();
  const double lmax = lam.cwiseAbs().maxCoeff();

  // (K1 (x) K1) y = b  <=>  K1 Y K1^T = Bimg for row-major reshapes.
  const Matrix bimg = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                                     Eigen::RowMajor>>(b.data(), n, n);
  Matrix coeff = q.transpose() * bimg * q;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const double prod = lam[i] * lam[j];
      coeff(i, j) = prod > rel_tol * lmax * lmax ? coeff(i, j) / prod : 0.0;
    }
  }
  const Matrix y = q * coeff * q.transpose();
  // x = B^-1 A^T y with B = D1 (x) D1 up to a scale that cancels.
  Matrix x = a1.transpose() * y * a1;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) x(i, j) /= rho[i] * rho[j];
  }
  Vector out(n * n);
  for (Eigen::Index i = 0; i < n; ++i) out.segment(i * n, n) = x.row(i).transpose();
  return out;
}

}  // namespace idarr::oracle
