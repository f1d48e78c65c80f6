#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <variant>
#include <vector>

namespace idarr {

/// L-curve stopping. The corner of (log residual, log norm) is sought
/// after at least `min_iters` iterations; it is accepted once `min_iters`
/// further iterates have not produced a sharper one, or when `max_iters`
/// is reached or the bidiagonalization terminates.
struct LCurveRule {
  int min_iters = 10;
  int max_iters = 100;
};

/// Discrepancy principle: first k with residual <= tau * noise_norm.
struct DiscrepancyRule {
  double noise_norm = 0.0;
  double tau = 1.01;
  int max_iters = 500;
};

struct FixedIterations {
  int k = 1;
};

using StopRule = std::variant<LCurveRule, DiscrepancyRule, FixedIterations>;

/// Throws UsageError when the rule's parameters are out of range.
void validate(const StopRule& rule);

/// Upper bound on iterations a rule may execute.
int iteration_cap(const StopRule& rule);

struct CurvePoint {
  double log_residual;
  double log_norm;
};

struct Corner {
  std::size_t index = 0;   ///< position in the input sequence
  double curvature = 0.0;  ///< positive for an L-shaped (clockwise) turn
  bool weak = false;       ///< no clear corner; index is a fallback
};

/// Curvatures at or below this value do not count as a corner.
inline constexpr double kWeakCornerCurvature = 1e-8;
/// Residuals and norms are clamped here before taking logarithms.
inline constexpr double kLogFloor = 1e-300;
/// Default merge distance for lcurve_corner. Stagnating Krylov iterates
/// produce near-coincident points whose curvature is dominated by rounding.
inline constexpr double kCornerMinSpacing = 0.02;

double safe_log(double value);

/// Signed three-point (circumscribed circle) curvature at the middle
/// point; positive for a clockwise turn. Zero when two points coincide.
double three_point_curvature(const CurvePoint& a, const CurvePoint& b,
                             const CurvePoint& c);

/// Corner of a discrete L-curve ordered by increasing iteration (or
/// decreasing regularization). Leading points at the log floor of the
/// norm are ignored and points within `min_spacing` (a fraction of the
/// bounding-box diagonal) of the last retained one are merged into it;
/// ties go to the smaller index.
/// Throws InsufficientHistoryError for fewer than 3 usable points.
Corner lcurve_corner(std::span<const CurvePoint> points,
                     double min_spacing = kCornerMinSpacing);

/// 1-based index of the first residual <= tau * noise_norm, if any.
std::optional<std::size_t> dp_stop(std::span<const double> residuals,
                                   double noise_norm, double tau);

}  // namespace idarr
