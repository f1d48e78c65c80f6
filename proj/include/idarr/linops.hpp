#pragma once

#include <functional>
#include <memory>

#include <Eigen/Dense>

namespace idarr {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// A real linear map A : R^n -> R^m accessed only through products with
/// A and its Euclidean adjoint. Implementations are immutable once built,
/// so apply/apply_adjoint may be called concurrently.
class LinearMap {
public:
  virtual ~LinearMap() = default;

  virtual Eigen::Index rows() const = 0;
  virtual Eigen::Index cols() const = 0;

  /// A v. Throws DimensionError when v.size() != cols().
  Vector apply(const Vector& v) const;
  /// A^T w. Throws DimensionError when w.size() != rows().
  Vector apply_adjoint(const Vector& w) const;

  struct AdjointApply {
    Vector p;  ///< A^T w + c
    Vector y;  ///< A (d .* p)
  };
  /// Both products of an A^T-then-A chain. `c` may be empty (zero); `d`
  /// scales p entrywise before the forward product. Dense maps do this in
  /// one sweep over the columns instead of two passes over the matrix.
  AdjointApply adjoint_then_apply(const Vector& w, const Vector& c,
                                  const Vector& d) const;

  /// Column sums of |A|. The default probes the map with each canonical
  /// basis vector; concrete maps override it with a direct pass.
  virtual Vector abs_column_sums() const;

  /// Dense entries, when the map stores them. nullptr otherwise.
  virtual const Matrix* dense() const { return nullptr; }

  /// Materializes the map column by column.
  Matrix to_dense() const;

protected:
  virtual Vector do_apply(const Vector& v) const = 0;
  virtual Vector do_apply_adjoint(const Vector& w) const = 0;
  virtual AdjointApply do_adjoint_then_apply(const Vector& w, const Vector& c,
                                             const Vector& d) const;
};

class DenseMap final : public LinearMap {
public:
  explicit DenseMap(Matrix entries);

  Eigen::Index rows() const override { return entries_.rows(); }
  Eigen::Index cols() const override { return entries_.cols(); }
  Vector abs_column_sums() const override;
  const Matrix* dense() const override { return &entries_; }
  const Matrix& entries() const { return entries_; }

protected:
  Vector do_apply(const Vector& v) const override;
  Vector do_apply_adjoint(const Vector& w) const override;
  AdjointApply do_adjoint_then_apply(const Vector& w, const Vector& c,
                                     const Vector& d) const override;

private:
  Matrix entries_;
};

class DiagonalMap final : public LinearMap {
public:
  explicit DiagonalMap(Vector diagonal);

  Eigen::Index rows() const override { return diagonal_.size(); }
  Eigen::Index cols() const override { return diagonal_.size(); }
  Vector abs_column_sums() const override { return diagonal_.cwiseAbs(); }
  const Vector& diagonal() const { return diagonal_; }

protected:
  Vector do_apply(const Vector& v) const override;
  Vector do_apply_adjoint(const Vector& w) const override;

private:
  Vector diagonal_;
};

/// Spatially invariant blur of an N x N image (row-major pixel vector)
/// with zero boundary conditions. The PSF center sits at
/// (psf.rows()/2, psf.cols()/2); output has the same size as the input.
class PsfConvolutionMap final : public LinearMap {
public:
  PsfConvolutionMap(Eigen::Index image_side, Matrix psf);

  Eigen::Index rows() const override { return side_ * side_; }
  Eigen::Index cols() const override { return side_ * side_; }
  Eigen::Index image_side() const { return side_; }
  const Matrix& psf() const { return psf_; }
  Vector abs_column_sums() const override;

protected:
  Vector do_apply(const Vector& v) const override;
  Vector do_apply_adjoint(const Vector& w) const override;

private:
  Vector correlate(const Vector& image, const Matrix& kernel, bool flip) const;

  Eigen::Index side_;
  Matrix psf_;
};

using FredholmKernel = std::function<double(double t, double s)>;

struct Interval {
  double lo;
  double hi;
};

/// Riemann-sum discretization A(j,i) = K(t_j, s_i) * delta with
/// s_i = a + i*delta (i = 1..n), delta = (b-a)/n and t_j = c + j(d-c)/m
/// (j = 1..m). The t_0 node is not an observation.
DenseMap build_fredholm_map(const FredholmKernel& kernel, Eigen::Index m,
                            Eigen::Index n, Interval s_range,
                            Interval t_range);

/// ||A||_2 estimate from `steps` power iterations on A^T A.
double estimate_operator_norm(const LinearMap& map, int steps = 10,
                              unsigned seed = 7);

/// Gaussian PSF with standard deviation `width` pixels, truncated at
/// radius ceil(3*width) and normalized to unit sum.
Matrix gaussian_psf(double width);

}  // namespace idarr
