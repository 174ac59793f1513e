#pragma once

#include <cmath>
#include <optional>
#include <utility>

#include "maopt/errors.hpp"
#include "maopt/types.hpp"

namespace maopt {

/// Strict interior of the feasible set: |x_n| < S_x/2, |y_n| < S_y/2 and
/// every pairwise distance > min_spacing.
inline bool strictly_feasible(const AntennaLayout& layout, const MovingRegion& region) {
  const int n = layout.size();
  const double hx = region.sx / 2.0;
  const double hy = region.sy / 2.0;
  const double d2 = region.min_spacing * region.min_spacing;
  for (int i = 0; i < n; ++i) {
    if (!(std::abs(layout.x(i)) < hx) || !(std::abs(layout.y(i)) < hy)) return false;
    for (int m = i + 1; m < n; ++m) {
      const double dx = layout.x(i) - layout.x(m);
      const double dy = layout.y(i) - layout.y(m);
      if (!(dx * dx + dy * dy > d2)) return false;
    }
  }
  return true;
}

inline double min_pairwise_distance(const AntennaLayout& layout) {
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < layout.size(); ++i)
    for (int m = i + 1; m < layout.size(); ++m)
      best = std::min(best, std::hypot(layout.x(i) - layout.x(m), layout.y(i) - layout.y(m)));
  return best;
}

/// Log-barrier L_f; std::nullopt stands for the -infinity value taken
/// outside the strict interior.
inline std::optional<double> barrier_value(const AntennaLayout& layout, const MovingRegion& region) {
  if (!strictly_feasible(layout, region)) return std::nullopt;
  const int n = layout.size();
  const double d2 = region.min_spacing * region.min_spacing;
  const double qx = region.sx * region.sx / 4.0;
  const double qy = region.sy * region.sy / 4.0;
  double v = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int m = i + 1; m < n; ++m) {
      const double dx = layout.x(i) - layout.x(m);
      const double dy = layout.y(i) - layout.y(m);
      v += std::log(dx * dx + dy * dy - d2);
    }
    v += std::log(qx - layout.x(i) * layout.x(i)) + std::log(qy - layout.y(i) * layout.y(i));
  }
  return v;
}

inline std::pair<RVector, RVector> barrier_gradient(const AntennaLayout& layout, const MovingRegion& region) {
  if (!strictly_feasible(layout, region))
    fail(ErrorKind::infeasible_point, "laga_optimizer::barrier_gradient", "layout is not strictly feasible");
  const int n = layout.size();
  const double d2 = region.min_spacing * region.min_spacing;
  const double qx = region.sx * region.sx / 4.0;
  const double qy = region.sy * region.sy / 4.0;
  RVector gx(n);
  RVector gy(n);
  for (int i = 0; i < n; ++i) {
    gx(i) = -2.0 * layout.x(i) / (qx - layout.x(i) * layout.x(i));
    gy(i) = -2.0 * layout.y(i) / (qy - layout.y(i) * layout.y(i));
    for (int m = 0; m < n; ++m) {
      if (m == i) continue;
      const double dx = layout.x(i) - layout.x(m);
      const double dy = layout.y(i) - layout.y(m);
      const double den = dx * dx + dy * dy - d2;
      gx(i) += 2.0 * dx / den;
      gy(i) += 2.0 * dy / den;
    }
  }
  return {gx, gy};
}

}  // namespace maopt
