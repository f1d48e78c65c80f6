#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "idarr/linops.hpp"
#include "idarr/rkhs.hpp"

namespace idarr {

enum class KernelId { ExpDecay, PolyDecay };
enum class TruthKind { InFsoi, OutFsoi };

/// K(t,s) = s^-2 exp(-s t)  or  K(t,s) = s^-1 |sin(s t + 1)|.
FredholmKernel fredholm_kernel(KernelId id);

inline constexpr Interval kFredholmSRange{1.0, 5.0};
inline constexpr Interval kFredholmTRange{0.0, 5.0};

struct FredholmSetup {
  std::shared_ptr<const DenseMap> map;
  RkhsGeometry geom;
  Vector s_grid;  ///< s_i = a + i delta, i = 1..n
  double dt;      ///< observation spacing (d - c) / m
};

FredholmSetup make_fredholm(KernelId id, Eigen::Index m, Eigen::Index n);

/// InFsoi: second generalized eigenvector of (A^T A, B), unit L2_rho
/// norm, sign fixed so that its largest-magnitude entry is positive.
/// OutFsoi: s^2 sampled on the s grid.
Vector true_solution(TruthKind kind, const FredholmSetup& setup);

struct TestProblem {
  std::shared_ptr<const LinearMap> map;
  RkhsGeometry geom;
  Vector x_true;
  Vector b_clean;
  Vector b;
  double sigma = 0.0;
  double dt = 0.0;
  double nsr = 0.0;
  std::uint64_t seed = 0;
};

/// Noise-free problem with b = b_clean = A x_true.
TestProblem make_problem(std::shared_ptr<const LinearMap> map, RkhsGeometry geom,
                         Vector x_true, double dt);

/// Returns a copy with b = b_clean + sigma sqrt(dt) g, sigma =
/// ||b_clean|| nsr, g standard normal from a mt19937_64 seeded by `seed`.
TestProblem add_noise(const TestProblem& clean, double nsr, std::uint64_t seed);

/// Gaussian white noise vector of the given length; the same stream
/// add_noise uses.
Vector standard_normal(Eigen::Index size, std::uint64_t seed);

/// ((x_hat - x_true)^T B (x_hat - x_true))^1/2.
double l2rho_error(const RkhsGeometry& geom, const Vector& x_hat,
                   const Vector& x_true);
/// sqrt(x^T B x).
double l2rho_norm(const RkhsGeometry& geom, const Vector& x);

struct PsfSpec {
  enum class Kind { Gaussian, FromFile, Delta };
  Kind kind = Kind::Gaussian;
  double width = 2.0;
  std::string path;
};

/// Builds the PSF for a spec; file PSFs are normalized to unit sum.
Matrix make_psf(const PsfSpec& spec);

/// Blurred, noisy observation of an N x N image (N >= 8, values in
/// [0,1]) under zero-boundary convolution with `psf`. The noise spacing is
/// 1/N^2, so ||b - b_clean|| is close to nsr ||b_clean||.
TestProblem make_deblur(const Matrix& image, const Matrix& psf, double nsr,
                        std::uint64_t seed);
TestProblem make_deblur(const std::string& image_path, const PsfSpec& psf,
                        double nsr, std::uint64_t seed);

/// Row-major pixel vector of a square image and back.
Vector image_to_vector(const Matrix& image);
Matrix vector_to_image(const Vector& pixels, Eigen::Index side);

/// Smooth synthetic test image with values in [0,1]: a disk, a
/// rectangle and two Gaussian blobs on a dark background.
Matrix phantom_image(Eigen::Index side);
Matrix checkerboard_image(Eigen::Index side, Eigen::Index cell);

}  // namespace idarr
