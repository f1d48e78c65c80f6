#include "idarr/solver.hpp"

#include <chrono>
#include <cmath>
#include <optional>
#include <vector>

#include "idarr/errors.hpp"

namespace idarr {

SolverRun::SolverRun(double alpha1, double beta1, const Vector& z1,
                     const Vector& zbar1)
    : x_(Vector::Zero(z1.size())),
      xbar_(Vector::Zero(z1.size())),
      w_(z1),
      wbar_(zbar1),
      rho_bar_(alpha1),
      gamma_bar_(beta1) {}

void SolverRun::update(double alpha_next, double beta_next, const Vector& z_next,
                       const Vector& zbar_next) {
  const double rho = std::hypot(rho_bar_, beta_next);
  if (!(rho > 0.0)) throw NumericalBreakdownError("Givens update: rho = 0");
  const double c = rho_bar_ / rho;
  const double s = beta_next / rho;
  const double theta = s * alpha_next;
  const double gamma = c * gamma_bar_;
  rho_bar_ = -c * alpha_next;
  gamma_bar_ = s * gamma_bar_;

  const double step = gamma / rho;
  x_ += step * w_;
  xbar_ += step * wbar_;
  const double ratio = theta / rho;
  w_ = z_next - ratio * w_;
  wbar_ = zbar_next - ratio * wbar_;
  ++k_;
}

double SolverRun::norm() const { return std::sqrt(std::max(0.0, x_.dot(xbar_))); }

namespace {

using Clock = std::chrono::steady_clock;

// Corner of the history so far, as a 1-based iteration number.
std::optional<Corner> history_corner(const std::vector<CurvePoint>& points) {
  try {
    Corner c = lcurve_corner(points);
    c.index += 1;
    return c;
  } catch (const InsufficientHistoryError&) {
    return std::nullopt;
  }
}

}  // namespace

SolveResult krylov_solve(const SolutionNorm& norm, const Vector& b,
                         const StopRule& stop, const SolveOptions& options) {
  validate(stop);
  const auto start = Clock::now();
  BidiagOptions bopts;
  bopts.reorthogonalize = options.reorthogonalize;
  bopts.termination_factor = options.termination_factor;
  GolubKahan gk(norm, b, bopts);

  SolveResult out;
  const Eigen::Index n = norm.map().cols();
  if (gk.terminated()) {
    // A^T b has no component the norm can see: x = 0 is the answer.
    out.x = Vector::Zero(n);
    out.terminated = true;
    out.k_t = 0;
    return out;
  }

  const auto& f = gk.factors();
  SolverRun run(f.alphas.back(), f.betas.back(), gk.z_last(), gk.zbar_last());
  const int cap = iteration_cap(stop);
  const auto* lcurve = std::get_if<LCurveRule>(&stop);
  const auto* dp = std::get_if<DiscrepancyRule>(&stop);

  std::vector<CurvePoint> curve;
  std::optional<Corner> corner;
  bool stopped_by_rule = false;
  const Vector zero = Vector::Zero(n);

  while (run.iterations() < cap) {
    const StepResult step = gk.step();
    if (step.outcome == StepOutcome::Extended) {
      run.update(step.alpha_next, step.beta_next, gk.z_last(), gk.zbar_last());
    } else {
      run.update(step.alpha_next, step.beta_next, zero, zero);
    }
    IterationRecord rec;
    rec.k = run.iterations();
    rec.residual = std::abs(run.residual());
    rec.norm = run.norm();
    rec.wall_ms = std::chrono::duration<double, std::milli>(Clock::now() - start).count();
    out.history.push_back(rec);
    if (options.observer) options.observer(run.x(), rec);

    if (lcurve) {
      curve.push_back({safe_log(rec.residual), safe_log(rec.norm)});
      corner = history_corner(curve);
      if (corner && rec.k >= lcurve->min_iters &&
          rec.k - static_cast<int>(corner->index) >= lcurve->min_iters) {
        stopped_by_rule = true;
        break;
      }
    } else if (dp) {
      if (rec.residual <= dp->tau * dp->noise_norm) {
        stopped_by_rule = true;
        break;
      }
    }
    if (gk.terminated()) break;
  }

  out.terminated = gk.terminated();
  out.k_t = gk.terminated() ? gk.factors().k_t : -1;
  if (lcurve && corner) {
    out.k_stop = static_cast<int>(corner->index);
    out.weak_corner = corner->weak;
    if (out.k_stop == run.iterations()) {
      out.x = run.x();
    } else {
      // The corner can move back to any earlier iterate; replaying the
      // (deterministic) recurrence is cheaper than storing every x_k.
      SolveOptions replay = options;
      replay.observer = nullptr;
      out.x = krylov_solve(norm, b, FixedIterations{out.k_stop}, replay).x;
    }
  } else {
    out.x = run.x();
    out.k_stop = run.iterations();
  }
  if (!stopped_by_rule && !std::holds_alternative<FixedIterations>(stop)) {
    // Reaching k_t ends the search legitimately for the L-curve; for DP
    // the threshold was simply never met.
    out.not_converged = dp != nullptr || !out.terminated;
  }
  return out;
}

SolveResult idarr_solve(const RkhsGeometry& geom, const Vector& b,
                        const StopRule& stop, const SolveOptions& options) {
  return krylov_solve(SolutionNorm::rkhs(geom), b, stop, options);
}

SolveResult irl2_solve(std::shared_ptr<const LinearMap> map, const Vector& b,
                       const StopRule& stop, const SolveOptions& options) {
  return krylov_solve(SolutionNorm::euclidean(std::move(map)), b, stop, options);
}

SolveResult irL2_solve(const RkhsGeometry& geom, const Vector& b,
                       const StopRule& stop, const SolveOptions& options) {
  return krylov_solve(SolutionNorm::weighted(geom), b, stop, options);
}

}  // namespace idarr
