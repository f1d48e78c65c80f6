#include "idarr/stopping.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "idarr/errors.hpp"

namespace idarr {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace

void validate(const StopRule& rule) {
  std::visit(
      overloaded{
          [](const LCurveRule& r) {
            if (r.min_iters < 10) {
              throw UsageError("L-curve needs min_iters >= 10");
            }
            if (r.max_iters < r.min_iters) {
              throw UsageError("L-curve needs max_iters >= min_iters");
            }
          },
          [](const DiscrepancyRule& r) {
            if (!(r.tau > 1.0)) throw UsageError("discrepancy tau must be > 1");
            if (!(r.noise_norm > 0.0) || !std::isfinite(r.noise_norm)) {
              throw UsageError("discrepancy noise norm must be positive");
            }
            if (r.max_iters < 1) throw UsageError("max_iters must be >= 1");
          },
          [](const FixedIterations& r) {
            if (r.k < 1) throw UsageError("fixed iteration count must be >= 1");
          },
      },
      rule);
}

int iteration_cap(const StopRule& rule) {
  return std::visit(overloaded{
                        [](const LCurveRule& r) { return r.max_iters; },
                        [](const DiscrepancyRule& r) { return r.max_iters; },
                        [](const FixedIterations& r) { return r.k; },
                    },
                    rule);
}

double safe_log(double value) { return std::log(std::max(value, kLogFloor)); }

double three_point_curvature(const CurvePoint& a, const CurvePoint& b,
                             const CurvePoint& c) {
  const double x1 = b.log_residual - a.log_residual;
  const double y1 = b.log_norm - a.log_norm;
  const double x2 = c.log_residual - b.log_residual;
  const double y2 = c.log_norm - b.log_norm;
  const double x3 = c.log_residual - a.log_residual;
  const double y3 = c.log_norm - a.log_norm;
  const double l1 = std::hypot(x1, y1);
  const double l2 = std::hypot(x2, y2);
  const double l3 = std::hypot(x3, y3);
  const double denom = l1 * l2 * l3;
  if (denom == 0.0 || !std::isfinite(denom)) return 0.0;
  const double cross = x1 * y2 - y1 * x2;
  return -2.0 * cross / denom;
}

Corner lcurve_corner(std::span<const CurvePoint> points, double min_spacing) {
  const double floor_log = safe_log(0.0);
  std::size_t first = 0;
  while (first < points.size() && points[first].log_norm <= floor_log) ++first;
  if (points.size() - first < 3) {
    throw InsufficientHistoryError("L-curve needs at least 3 points, have " +
                                   std::to_string(points.size() - first));
  }

  double xmin = INFINITY, xmax = -INFINITY, ymin = INFINITY, ymax = -INFINITY;
  for (std::size_t i = first; i < points.size(); ++i) {
    xmin = std::min(xmin, points[i].log_residual);
    xmax = std::max(xmax, points[i].log_residual);
    ymin = std::min(ymin, points[i].log_norm);
    ymax = std::max(ymax, points[i].log_norm);
  }
  const double spacing = min_spacing * std::hypot(xmax - xmin, ymax - ymin);
  std::vector<std::size_t> kept{first};
  for (std::size_t i = first + 1; i < points.size(); ++i) {
    const CurvePoint& last = points[kept.back()];
    const double dist = std::hypot(points[i].log_residual - last.log_residual,
                                   points[i].log_norm - last.log_norm);
    if (dist >= spacing && dist > 0.0) kept.push_back(i);
  }

  Corner best;
  if (kept.size() < 3) {
    // No resolvable turn: take the point where the curve stops moving.
    best.index = kept.back();
    best.weak = true;
    return best;
  }
  best.index = kept[1];
  best.curvature = -INFINITY;
  for (std::size_t j = 1; j + 1 < kept.size(); ++j) {
    const double kappa = three_point_curvature(points[kept[j - 1]], points[kept[j]],
                                               points[kept[j + 1]]);
    if (kappa > best.curvature) {
      best.curvature = kappa;
      best.index = kept[j];
    }
  }
  best.weak = !(best.curvature > kWeakCornerCurvature);
  return best;
}

std::optional<std::size_t> dp_stop(std::span<const double> residuals,
                                   double noise_norm, double tau) {
  if (!(tau > 1.0)) throw UsageError("discrepancy tau must be > 1");
  const double threshold = tau * noise_norm;
  for (std::size_t k = 0; k < residuals.size(); ++k) {
    if (residuals[k] <= threshold) return k + 1;
  }
  return std::nullopt;
}

}  // namespace idarr
