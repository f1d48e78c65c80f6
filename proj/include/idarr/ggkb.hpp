#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "idarr/linops.hpp"
#include "idarr/rkhs.hpp"

namespace idarr {

/// The norm in which solution iterates are measured. The bidiagonalization
/// only needs M^+ for the norm matrix M:
///   Rkhs       M = C_rkhs, M^+ = B^-1 A^T A B^-1   (iDARR)
///   Weighted   M = B,      M^+ = B^-1              (IR-L2)
///   Euclidean  M = I                               (IR-l2 / LSQR)
class SolutionNorm {
public:
  enum class Kind { Rkhs, Weighted, Euclidean };

  static SolutionNorm rkhs(const RkhsGeometry& geom);
  static SolutionNorm weighted(const RkhsGeometry& geom);
  static SolutionNorm euclidean(std::shared_ptr<const LinearMap> map);

  Kind kind() const { return kind_; }
  const LinearMap& map() const { return *map_; }

  struct Pinv {
    Vector s;         ///< M^+ p
    double quad = 0;  ///< p^T M^+ p, accumulated as a sum of squares
  };
  Pinv apply_pinv(const Vector& p) const;

  struct Chain {
    Vector p;         ///< A^T w + c
    Vector s;         ///< M^+ p
    double quad = 0;  ///< p^T M^+ p
    Vector as;        ///< A s
  };
  /// p = A^T w + c followed by M^+ p and A M^+ p, using fused
  /// adjoint-then-forward sweeps (one for Weighted/Euclidean, two for Rkhs).
  Chain adjoint_pinv(const Vector& w, const Vector& c) const;

private:
  SolutionNorm(Kind kind, std::shared_ptr<const LinearMap> map,
               Vector inverse_weights);

  Kind kind_;
  std::shared_ptr<const LinearMap> map_;
  Vector inverse_weights_;
};

struct BidiagOptions {
  /// Re-orthogonalize u against U and (z, zbar) against prior pairs.
  bool reorthogonalize = false;
  /// Keep every u, z, zbar (implied by reorthogonalize).
  bool keep_basis = false;
  /// alpha/beta count as zero below factor * max(m,n) * eps times the
  /// largest bidiagonal entry (or ||A z_i||) seen so far.
  double termination_factor = 1.0;
};

/// Output of the generalized Golub-Kahan process. alphas/betas hold
/// alpha_1.. and beta_1..; the first k_t of each are positive. When the
/// process terminates, the zero (or negligible) value that stopped it is
/// stored as 0.
struct BidiagFactors {
  std::vector<double> alphas;
  std::vector<double> betas;
  std::vector<Vector> u;     ///< u_1..; all of them when the basis is kept
  std::vector<Vector> z;
  std::vector<Vector> zbar;  ///< zbar_i = M z_i
  bool terminated = false;
  int k_t = -1;              ///< valid when terminated
  int steps = 0;             ///< completed calls to step()
};

enum class StepOutcome { Extended, Terminated };

struct StepResult {
  StepOutcome outcome = StepOutcome::Extended;
  double alpha_next = 0.0;  ///< alpha_{i+1}, 0 when it terminated the process
  double beta_next = 0.0;   ///< beta_{i+1}, 0 when it terminated the process
};

/// Generalized Golub-Kahan bidiagonalization driven one step at a time.
/// The constructor performs the initialization (beta_1, u_1, alpha_1, z_1,
/// zbar_1); each step() appends beta_{i+1}, u_{i+1}, alpha_{i+1},
/// z_{i+1}, zbar_{i+1}.
class GolubKahan {
public:
  GolubKahan(SolutionNorm norm, const Vector& b, BidiagOptions options = {});

  StepResult step();

  const BidiagFactors& factors() const { return factors_; }
  bool terminated() const { return factors_.terminated; }
  const SolutionNorm& norm() const { return norm_; }

  const Vector& u_last() const { return factors_.u.back(); }
  const Vector& z_last() const { return factors_.z.back(); }
  const Vector& zbar_last() const { return factors_.zbar.back(); }

  double tolerance() const { return tolerance_; }

private:
  void push(std::vector<Vector>& basis, Vector v);
  void reorthogonalize_u(Vector& r) const;
  void reorthogonalize_p(Vector& p) const;
  void terminate(int k_t);

  SolutionNorm norm_;
  BidiagOptions options_;
  BidiagFactors factors_;
  double tolerance_;
  double scale_ = 0.0;
  Vector az_;  ///< A z_last from the fused path; empty when not available
};

/// Runs up to max_steps steps or until termination.
BidiagFactors run_ggkb(const SolutionNorm& norm, const Vector& b,
                       int max_steps, bool reorthogonalize);

}  // namespace idarr
