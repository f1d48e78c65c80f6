#pragma once

#include <memory>
#include <vector>

#include "idarr/linops.hpp"

namespace idarr {

/// Exploration measure of a forward operator: normalized column sums of
/// |A|. Throws DegenerateColumnError for an all-zero column.
Vector compute_exploration_weights(const LinearMap& map);

/// Data-adaptive geometry attached to a forward operator A: the diagonal
/// basis matrix B = diag(w) and the matrix-free pseudo-inverse of the
/// RKHS metric, C_rkhs^+ = B^-1 A^T A B^-1.
class RkhsGeometry {
public:
  /// B = diag(rho) with rho the exploration measure of `map`.
  static RkhsGeometry from_exploration(std::shared_ptr<const LinearMap> map);
  /// B = diag(weights) for caller-supplied positive weights (not
  /// normalized).
  static RkhsGeometry with_weights(std::shared_ptr<const LinearMap> map,
                                   Vector weights);

  const LinearMap& map() const { return *map_; }
  const std::shared_ptr<const LinearMap>& map_ptr() const { return map_; }
  const Vector& weights() const { return weights_; }
  const Vector& inverse_weights() const { return inverse_weights_; }
  Eigen::Index size() const { return weights_.size(); }

  /// s = B^-1 A^T A B^-1 p using two operator products and diagonal
  /// scalings only.
  Vector apply_crkhs_pinv(const Vector& p) const;

private:
  RkhsGeometry(std::shared_ptr<const LinearMap> map, Vector weights);

  std::shared_ptr<const LinearMap> map_;
  Vector weights_;
  Vector inverse_weights_;
};

/// Generalized eigenpairs of (A^T A, B): A^T A V = B V Lambda with
/// V^T B V = I, eigenvalues in descending order.
struct SpectralDecomposition {
  Matrix vectors;
  Vector eigenvalues;
  Vector weights;  ///< diagonal of B
  Eigen::Index rank = 0;

  /// V^-1 = V^T B.
  Matrix inverse_vectors() const;
};

/// Dense generalized eigensolver (O(n^3)); used by the direct methods and
/// by the test oracles. Eigenvalues count as positive above
/// max(lambda) * n * eps.
SpectralDecomposition generalized_eig(const Matrix& a, const Vector& weights);

/// x^T C_rkhs x = sum_{i<rank} (V^-1 x)_i^2 / lambda_i.
double rkhs_norm_squared(const SpectralDecomposition& decomp, const Vector& x);

/// One point of a Tikhonov regularization path.
struct PathPoint {
  double lambda;
  double residual_sq;  ///< ||A x_lambda - b||^2
  double penalty;      ///< ||x_lambda||_*^2 in the method's norm
};

struct TikhonovResult {
  Vector x;
  double lambda_star = 0.0;
  std::size_t corner_index = 0;
  bool weak_corner = false;
  std::vector<PathPoint> path;  ///< ordered by decreasing lambda
};

enum class TikhonovPenalty {
  Euclidean,  ///< ||x||_2^2
  Weighted,   ///< x^T B x
  Rkhs,       ///< x^T C_rkhs x (DARTR)
};

/// Number of grid points on the regularization-parameter path.
inline constexpr int kTikhonovGridSize = 64;

/// Point on the DARTR path for a given lambda: solves
/// (C*^T A^T A C* + lambda I_r) x~ = C*^T A^T b with C* = V Lambda^1/2 and
/// returns x = C* x~.
Vector dartr_path_point(const SpectralDecomposition& decomp,
                        const Vector& atb, double lambda);

/// Direct Tikhonov regularization with the L-curve choice of lambda over
/// a logarithmic grid spanning the positive spectrum. `decomp` must come
/// from generalized_eig(a, w) with w = 1 for the Euclidean penalty and
/// w = B otherwise.
TikhonovResult tikhonov_lcurve(const Matrix& a, const Vector& b,
                               const SpectralDecomposition& decomp,
                               TikhonovPenalty penalty);

/// DARTR: RKHS-penalized Tikhonov with L-curve lambda selection.
TikhonovResult dartr_solve(const Matrix& a, const Vector& b,
                           const Vector& weights);

}  // namespace idarr
