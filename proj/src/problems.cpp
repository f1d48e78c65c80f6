#include "idarr/problems.hpp"

#include <cmath>

#include <boost/random/mersenne_twister.hpp>
#include <boost/random/normal_distribution.hpp>

#include "idarr/errors.hpp"
#include "idarr/io.hpp"

namespace idarr {

FredholmKernel fredholm_kernel(KernelId id) {
  switch (id) {
    case KernelId::ExpDecay:
      return [](double t, double s) { return std::exp(-s * t) / (s * s); };
    case KernelId::PolyDecay:
      return [](double t, double s) { return std::abs(std::sin(s * t + 1.0)) / s; };
  }
  throw UsageError("unknown kernel id");
}

FredholmSetup make_fredholm(KernelId id, Eigen::Index m, Eigen::Index n) {
  if (m < 2 || n < 2) throw DimensionError("make_fredholm: need m, n >= 2");
  auto map = std::make_shared<const DenseMap>(
      build_fredholm_map(fredholm_kernel(id), m, n, kFredholmSRange, kFredholmTRange));
  auto geom = RkhsGeometry::from_exploration(map);
  const double delta = (kFredholmSRange.hi - kFredholmSRange.lo) / static_cast<double>(n);
  Vector s(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    s[i] = kFredholmSRange.lo + static_cast<double>(i + 1) * delta;
  }
  const double dt = (kFredholmTRange.hi - kFredholmTRange.lo) / static_cast<double>(m);
  return FredholmSetup{std::move(map), std::move(geom), std::move(s), dt};
}

Vector true_solution(TruthKind kind, const FredholmSetup& setup) {
  const Eigen::Index n = setup.geom.size();
  if (n < 2) throw DimensionError("true_solution: need n >= 2");
  if (kind == TruthKind::OutFsoi) return setup.s_grid.array().square().matrix();

  const auto decomp = generalized_eig(setup.map->entries(), setup.geom.weights());
  Vector x = decomp.vectors.col(1);
  Eigen::Index imax = 0;
  x.cwiseAbs().maxCoeff(&imax);
  if (x[imax] < 0.0) x = -x;
  return x;
}

TestProblem make_problem(std::shared_ptr<const LinearMap> map, RkhsGeometry geom,
                         Vector x_true, double dt) {
  if (!map) throw GeometryError("make_problem: null operator");
  if (x_true.size() != map->cols()) throw DimensionError("make_problem: x_true length");
  Vector b_clean = map->apply(x_true);
  TestProblem p{std::move(map), std::move(geom), std::move(x_true), b_clean, b_clean};
  p.dt = dt;
  return p;
}

Vector standard_normal(Eigen::Index size, std::uint64_t seed) {
  boost::random::mt19937_64 rng(seed);
  boost::random::normal_distribution<double> normal(0.0, 1.0);
  Vector g(size);
  for (Eigen::Index i = 0; i < size; ++i) g[i] = normal(rng);
  return g;
}

TestProblem add_noise(const TestProblem& clean, double nsr, std::uint64_t seed) {
  if (!(nsr >= 0.0) || !std::isfinite(nsr)) throw UsageError("nsr must be >= 0");
  TestProblem p = clean;
  p.nsr = nsr;
  p.seed = seed;
  p.sigma = clean.b_clean.norm() * nsr;
  if (nsr == 0.0) {
    p.b = clean.b_clean;
    return p;
  }
  p.b = clean.b_clean + (p.sigma * std::sqrt(p.dt)) * standard_normal(clean.b_clean.size(), seed);
  return p;
}

double l2rho_norm(const RkhsGeometry& geom, const Vector& x) {
  if (x.size() != geom.size()) throw DimensionError("l2rho_norm: length mismatch");
  return std::sqrt(x.cwiseAbs2().dot(geom.weights()));
}

double l2rho_error(const RkhsGeometry& geom, const Vector& x_hat, const Vector& x_true) {
  if (x_hat.size() != x_true.size()) throw DimensionError("l2rho_error: length mismatch");
  return l2rho_norm(geom, x_hat - x_true);
}

Matrix make_psf(const PsfSpec& spec) {
  switch (spec.kind) {
    case PsfSpec::Kind::Gaussian:
      return gaussian_psf(spec.width);
    case PsfSpec::Kind::Delta:
      return Matrix::Ones(1, 1);
    case PsfSpec::Kind::FromFile: {
      Matrix psf = io::read_text_matrix(spec.path);
      const double total = psf.sum();
      if ((psf.array() < 0.0).any() || !(total > 0.0)) {
        throw GeometryError("PSF must be nonnegative with positive sum: " + spec.path);
      }
      return psf / total;
    }
  }
  throw UsageError("unknown PSF kind");
}

Vector image_to_vector(const Matrix& image) {
  Vector v(image.size());
  for (Eigen::Index r = 0; r < image.rows(); ++r) {
    v.segment(r * image.cols(), image.cols()) = image.row(r).transpose();
  }
  return v;
}

Matrix vector_to_image(const Vector& pixels, Eigen::Index side) {
  if (pixels.size() != side * side) throw DimensionError("vector_to_image: size");
  Matrix image(side, side);
  for (Eigen::Index r = 0; r < side; ++r) {
    image.row(r) = pixels.segment(r * side, side).transpose();
  }
  return image;
}

TestProblem make_deblur(const Matrix& image, const Matrix& psf, double nsr,
                        std::uint64_t seed) {
  if (image.rows() != image.cols()) throw DimensionError("deblur image must be square");
  if (image.rows() < 8) throw DimensionError("deblur image side must be >= 8");
  const Eigen::Index side = image.rows();
  auto map = std::make_shared<const PsfConvolutionMap>(side, psf);
  auto geom = RkhsGeometry::from_exploration(map);
  auto clean = make_problem(map, std::move(geom), image_to_vector(image),
                            1.0 / static_cast<double>(side * side));
  return add_noise(clean, nsr, seed);
}

TestProblem make_deblur(const std::string& image_path, const PsfSpec& psf,
                        double nsr, std::uint64_t seed) {
  return make_deblur(io::read_pgm(image_path), make_psf(psf), nsr, seed);
}

Matrix phantom_image(Eigen::Index side) {
  if (side < 8) throw DimensionError("phantom side must be >= 8");
  Matrix img = Matrix::Constant(side, side, 0.1);
  const double h = 1.0 / static_cast<double>(side);
  for (Eigen::Index r = 0; r < side; ++r) {
    for (Eigen::Index c = 0; c < side; ++c) {
      const double y = (static_cast<double>(r) + 0.5) * h;
      const double x = (static_cast<double>(c) + 0.5) * h;
      double v = img(r, c);
      if (std::hypot(x - 0.3, y - 0.35) < 0.18) v = 0.8;
      if (x > 0.55 && x < 0.85 && y > 0.2 && y < 0.45) v = 0.55;
      v += 0.6 * std::exp(-(std::pow(x - 0.65, 2) + std::pow(y - 0.72, 2)) / 0.006);
      v += 0.35 * std::exp(-(std::pow(x - 0.28, 2) + std::pow(y - 0.78, 2)) / 0.012);
      img(r, c) = std::min(v, 1.0);
    }
  }
  return img;
}

Matrix checkerboard_image(Eigen::Index side, Eigen::Index cell) {
  if (cell < 1) throw UsageError("checkerboard cell must be >= 1");
  Matrix img(side, side);
  for (Eigen::Index r = 0; r < side; ++r) {
    for (Eigen::Index c = 0; c < side; ++c) {
      img(r, c) = ((r / cell + c / cell) % 2 == 0) ? 1.0 : 0.0;
    }
  }
  return img;
}

}  // namespace idarr
