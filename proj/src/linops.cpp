#include "idarr/linops.hpp"

#include <cmath>
#include <random>
#include <string>

#include "idarr/errors.hpp"

namespace idarr {

namespace {

void check_length(Eigen::Index got, Eigen::Index want, const char* what) {
  if (got != want) {
    throw DimensionError(std::string(what) + ": expected length " +
                         std::to_string(want) + ", got " +
                         std::to_string(got));
  }
}

}  // namespace

Vector LinearMap::apply(const Vector& v) const {
  check_length(v.size(), cols(), "apply");
  return do_apply(v);
}

Vector LinearMap::apply_adjoint(const Vector& w) const {
  check_length(w.size(), rows(), "apply_adjoint");
  return do_apply_adjoint(w);
}

LinearMap::AdjointApply LinearMap::adjoint_then_apply(const Vector& w, const Vector& c,
                                                      const Vector& d) const {
  check_length(w.size(), rows(), "adjoint_then_apply");
  if (c.size() != 0) check_length(c.size(), cols(), "adjoint_then_apply shift");
  check_length(d.size(), cols(), "adjoint_then_apply scale");
  return do_adjoint_then_apply(w, c, d);
}

LinearMap::AdjointApply LinearMap::do_adjoint_then_apply(const Vector& w, const Vector& c,
                                                         const Vector& d) const {
  AdjointApply out;
  out.p = do_apply_adjoint(w);
  if (c.size() != 0) out.p += c;
  out.y = do_apply(d.cwiseProduct(out.p));
  return out;
}

Vector LinearMap::abs_column_sums() const {
  Vector sums(cols());
  Vector e = Vector::Zero(cols());
  for (Eigen::Index i = 0; i < cols(); ++i) {
    e[i] = 1.0;
    sums[i] = do_apply(e).cwiseAbs().sum();
    e[i] = 0.0;
  }
  return sums;
}

Matrix LinearMap::to_dense() const {
  if (const Matrix* d = dense()) return *d;
  Matrix out(rows(), cols());
  Vector e = Vector::Zero(cols());
  for (Eigen::Index i = 0; i < cols(); ++i) {
    e[i] = 1.0;
    out.col(i) = do_apply(e);
    e[i] = 0.0;
  }
  return out;
}

DenseMap::DenseMap(Matrix entries) : entries_(std::move(entries)) {
  if (entries_.rows() < 1 || entries_.cols() < 1) {
    throw DimensionError("DenseMap: empty matrix");
  }
}

Vector DenseMap::abs_column_sums() const {
  return entries_.cwiseAbs().colwise().sum().transpose();
}

Vector DenseMap::do_apply(const Vector& v) const { return entries_ * v; }

Vector DenseMap::do_apply_adjoint(const Vector& w) const {
  return entries_.transpose() * w;
}

LinearMap::AdjointApply DenseMap::do_adjoint_then_apply(const Vector& w, const Vector& c,
                                                        const Vector& d) const {
  AdjointApply out;
  out.p.resize(entries_.cols());
  out.y = Vector::Zero(entries_.rows());
  const bool shifted = c.size() != 0;
  for (Eigen::Index j = 0; j < entries_.cols(); ++j) {
    const auto col = entries_.col(j);
    const double pj = col.dot(w) + (shifted ? c[j] : 0.0);
    out.p[j] = pj;
    out.y.noalias() += (d[j] * pj) * col;
  }
  return out;
}

DiagonalMap::DiagonalMap(Vector diagonal) : diagonal_(std::move(diagonal)) {
  if (diagonal_.size() < 1) throw DimensionError("DiagonalMap: empty");
}

Vector DiagonalMap::do_apply(const Vector& v) const {
  return diagonal_.cwiseProduct(v);
}

Vector DiagonalMap::do_apply_adjoint(const Vector& w) const {
  return diagonal_.cwiseProduct(w);
}

PsfConvolutionMap::PsfConvolutionMap(Eigen::Index image_side, Matrix psf)
    : side_(image_side), psf_(std::move(psf)) {
  if (side_ < 1) throw DimensionError("PsfConvolutionMap: image side < 1");
  if (psf_.size() == 0) throw DimensionError("PsfConvolutionMap: empty PSF");
  if ((psf_.array() < 0.0).any() || !psf_.allFinite()) {
    throw GeometryError("PsfConvolutionMap: PSF must be finite and nonnegative");
  }
}

// out(i,j) = sum_{p,q} k(p,q) * img(i + s*(p - cr), j + s*(q - cc)) with
// s = -1 for convolution and s = +1 for correlation; pixels outside the
// image are zero.
Vector PsfConvolutionMap::correlate(const Vector& image, const Matrix& kernel,
                                    bool flip) const {
  const Eigen::Index n = side_;
  const Eigen::Index cr = kernel.rows() / 2;
  const Eigen::Index cc = kernel.cols() / 2;
  const Eigen::Index sign = flip ? -1 : 1;
  Vector out = Vector::Zero(n * n);
  for (Eigen::Index p = 0; p < kernel.rows(); ++p) {
    const Eigen::Index dr = sign * (p - cr);
    for (Eigen::Index q = 0; q < kernel.cols(); ++q) {
      const double k = kernel(p, q);
      if (k == 0.0) continue;
      const Eigen::Index dc = sign * (q - cc);
      const Eigen::Index i0 = std::max<Eigen::Index>(0, -dr);
      const Eigen::Index i1 = std::min<Eigen::Index>(n, n - dr);
      const Eigen::Index j0 = std::max<Eigen::Index>(0, -dc);
      const Eigen::Index j1 = std::min<Eigen::Index>(n, n - dc);
      if (i0 >= i1 || j0 >= j1) continue;
      for (Eigen::Index i = i0; i < i1; ++i) {
        out.segment(i * n + j0, j1 - j0) +=
            k * image.segment((i + dr) * n + j0 + dc, j1 - j0);
      }
    }
  }
  return out;
}

Vector PsfConvolutionMap::do_apply(const Vector& v) const {
  return correlate(v, psf_, /*flip=*/true);
}

Vector PsfConvolutionMap::do_apply_adjoint(const Vector& w) const {
  return correlate(w, psf_, /*flip=*/false);
}

Vector PsfConvolutionMap::abs_column_sums() const {
  // Column i of A is the PSF placed at pixel i, clipped to the image.
  return correlate(Vector::Ones(side_ * side_), psf_.cwiseAbs(), false);
}

DenseMap build_fredholm_map(const FredholmKernel& kernel, Eigen::Index m,
                            Eigen::Index n, Interval s_range,
                            Interval t_range) {
  if (m < 1 || n < 1) throw DimensionError("build_fredholm_map: m, n >= 1");
  if (!(s_range.lo < s_range.hi) || !(t_range.lo < t_range.hi)) {
    throw DimensionError("build_fredholm_map: empty interval");
  }
  const double delta = (s_range.hi - s_range.lo) / static_cast<double>(n);
  const double dt = (t_range.hi - t_range.lo) / static_cast<double>(m);
  Matrix a(m, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double s = s_range.lo + static_cast<double>(i + 1) * delta;
    for (Eigen::Index j = 0; j < m; ++j) {
      const double t = t_range.lo + static_cast<double>(j + 1) * dt;
      const double k = kernel(t, s);
      if (!std::isfinite(k)) {
        throw KernelEvaluationError("kernel is not finite at t=" +
                                    std::to_string(t) +
                                    ", s=" + std::to_string(s));
      }
      a(j, i) = k * delta;
    }
  }
  return DenseMap(std::move(a));
}

double estimate_operator_norm(const LinearMap& map, int steps, unsigned seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  Vector v(map.cols());
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = unif(gen);
  double sigma = 0.0;
  for (int it = 0; it < steps; ++it) {
    const double nv = v.norm();
    if (nv == 0.0) return 0.0;
    v /= nv;
    const Vector av = map.apply(v);
    sigma = av.norm();
    v = map.apply_adjoint(av);
  }
  return sigma;
}

Matrix gaussian_psf(double width) {
  if (!(width > 0.0)) throw GeometryError("gaussian_psf: width must be > 0");
  const auto radius = static_cast<Eigen::Index>(std::ceil(3.0 * width));
  const Eigen::Index size = 2 * radius + 1;
  Matrix psf(size, size);
  for (Eigen::Index p = 0; p < size; ++p) {
    for (Eigen::Index q = 0; q < size; ++q) {
      const double dr = static_cast<double>(p - radius);
      const double dc = static_cast<double>(q - radius);
      psf(p, q) = std::exp(-(dr * dr + dc * dc) / (2.0 * width * width));
    }
  }
  return psf / psf.sum();
}

}  // namespace idarr
