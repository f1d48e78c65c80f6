#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "idarr/ggkb.hpp"
#include "idarr/stopping.hpp"

namespace idarr {

struct IterationRecord {
  int k = 0;
  double residual = 0.0;  ///< gamma_bar_{k+1} = ||A x_k - b||
  double norm = 0.0;      ///< ||x_k|| in the solver's norm, sqrt(x^T xbar)
  double wall_ms = 0.0;   ///< elapsed since the solve started
};

/// Givens-rotation update of the projected least-squares problem. Holds
/// x_k, its shadow xbar_k = M x_k and the search directions w, wbar; each
/// update costs O(n).
class SolverRun {
public:
  /// Starts from x_0 = 0 with w_1 = z_1, wbar_1 = zbar_1,
  /// gamma_bar_1 = beta_1, rho_bar_1 = alpha_1.
  SolverRun(double alpha1, double beta1, const Vector& z1, const Vector& zbar1);

  /// Advances to x_{i+1} from the next bidiagonalization quantities. When
  /// the process has terminated pass zeros for the scalars and vectors
  /// that were not produced.
  void update(double alpha_next, double beta_next, const Vector& z_next,
              const Vector& zbar_next);

  int iterations() const { return k_; }
  const Vector& x() const { return x_; }
  const Vector& xbar() const { return xbar_; }
  double residual() const { return gamma_bar_; }
  /// sqrt(x^T xbar), clamped at zero against rounding.
  double norm() const;

private:
  Vector x_, xbar_, w_, wbar_;
  double rho_bar_;
  double gamma_bar_;
  int k_ = 0;
};

struct SolveOptions {
  bool reorthogonalize = false;
  double termination_factor = 1.0;
  /// Called after every iteration with x_k; lets callers trace error
  /// curves without the solver storing iterates.
  std::function<void(const Vector& x, const IterationRecord& rec)> observer;
};

struct SolveResult {
  Vector x;
  int k_stop = 0;
  std::vector<IterationRecord> history;
  /// The rule never fired (DP threshold not reached, or the L-curve
  /// corner was not confirmed before max_iters). x is still usable.
  bool not_converged = false;
  bool weak_corner = false;
  bool terminated = false;  ///< the bidiagonalization reached k_t
  int k_t = -1;
};

/// Krylov regularization in the geometry of `norm`, stopped by `stop`.
SolveResult krylov_solve(const SolutionNorm& norm, const Vector& b,
                         const StopRule& stop, const SolveOptions& options = {});

/// iDARR: iterates in the data-adaptive RKHS norm.
SolveResult idarr_solve(const RkhsGeometry& geom, const Vector& b,
                        const StopRule& stop, const SolveOptions& options = {});

/// IR-l2: LSQR.
SolveResult irl2_solve(std::shared_ptr<const LinearMap> map, const Vector& b,
                       const StopRule& stop, const SolveOptions& options = {});

/// IR-L2: LSQR in the norm x^T B x.
SolveResult irL2_solve(const RkhsGeometry& geom, const Vector& b,
                       const StopRule& stop, const SolveOptions& options = {});

}  // namespace idarr
