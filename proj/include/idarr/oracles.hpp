#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "idarr/ggkb.hpp"
#include "idarr/linops.hpp"

// Dense reference computations used to check the matrix-free solvers.
// They go through SVD/QR/eigen routes that share no code with the
// iterative path and are only meant for small problems.
namespace idarr::oracle {

/// Orthonormal basis of range(C_rkhs) = range(C_rkhs^+) = B^-1 range(A^T).
Matrix crkhs_range_basis(const Matrix& a, const Vector& weights);

/// argmin over x in range(C_rkhs) of ||A x - b||; unique because A is
/// injective on that subspace.
Vector restricted_least_squares(const Matrix& a, const Vector& weights,
                                const Vector& b);

/// ||P_range(C) A^T (A x - b)||, zero at the restricted minimizer.
double restricted_gradient_norm(const Matrix& a, const Vector& weights,
                                const Vector& x, const Vector& b);

/// Number of distinct positive eigenvalues of A C^+ A^T = (A B^-1 A^T)^2
/// whose eigenspace carries a nonzero part of b. Eigenvalues within
/// `cluster_tol` (relative to the largest) are treated as one.
int distinct_projection_count(const Matrix& a, const Vector& weights,
                              const Vector& b, double cluster_tol = 1e-8,
                              double projection_tol = 1e-8);

/// Numerical rank of A from its singular values.
Eigen::Index svd_rank(const Matrix& a);

/// x_k = Z_k y_k with y_k = argmin ||B_k y - beta_1 e_1|| solved densely.
/// Needs the full basis (keep_basis) and k <= number of stored z.
Vector bidiagonal_solution(const BidiagFactors& f, int k);

/// Classical LSQR on A B^-1/2, returning x_j = B^-1/2 y_j for j = 1..k.
/// Stops early if the recurrence breaks down.
std::vector<Vector> split_preconditioned_lsqr(const Matrix& a, const Vector& weights,
                                              const Vector& b, int k);

/// Minimizer of ||A x - b|| over span(Z) computed in a randomly mixed
/// basis Z R; equals x_k when the k-step problem has a unique solution.
Vector mixed_basis_solution(const Matrix& a, const Matrix& z, const Vector& b,
                            std::uint64_t seed);

/// Dimension of span{z_1..z_k} + K_k(C^+ A^T A, C^+ A^T b) minus k:
/// zero when the two subspaces coincide.
Eigen::Index krylov_span_excess(const Matrix& a, const Vector& weights,
                                const Vector& b, const Matrix& z);

/// 1D factor A1 of a separable PSF on an axis of `side` pixels with zero
/// boundary, so that the 2D blur of row-major images is A1 (x) A1.
/// Throws GeometryError when the PSF is not an outer product g g^T.
Matrix separable_blur_factor(Eigen::Index side, const Matrix& psf);

/// Terminal (naive) solution x_{k_t} for A = A1 (x) A1: the least squares
/// solution restricted to range(C_rkhs), from the eigendecomposition of
/// A1 D1^-1 A1^T. Eigenvalue products at or below rel_tol times the
/// largest count as zero.
Vector separable_naive_solution(const Matrix& a1, const Vector& b,
                                double rel_tol = 1e-13);

struct PropertyResult {
  std::string name;
  double deviation;
  double tolerance;
  bool pass() const { return deviation <= tolerance; }
};

/// Property battery on a random m x n instance with exploration weights:
/// orthogonality, residual identity, bidiagonal identity, k_t count,
/// terminal solution, uniqueness. `rank` < min(m,n) builds a
/// rank-deficient operator.
std::vector<PropertyResult> property_battery(Eigen::Index m, Eigen::Index n,
                                             Eigen::Index rank, std::uint64_t seed);

/// Random matrix with entries N(0,1) from a seeded generator.
Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed);

/// Random m x n matrix of the given rank: G1 (m x r) * G2 (r x n).
Matrix random_low_rank(Eigen::Index m, Eigen::Index n, Eigen::Index rank,
                       std::uint64_t seed);

}  // namespace idarr::oracle
