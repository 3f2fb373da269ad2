#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "walkrl/walker/config.hpp"
#include "walkrl/walker/terrain.hpp"

namespace walkrl::walker {

inline constexpr std::size_t kLidarRays = 10;

using LidarScan = std::array<double, kLidarRays>;

// Distance along the ray (ox, oy) + t (ux, uy), |u| = 1, to the first point
// at or below the heightfield, clamped to max_range. Exact for the
// piecewise-linear surface: the gap is linear in t between grid lines.
inline double ray_cast(const Terrain& terrain, double ox, double oy, double ux, double uy,
                       double max_range) {
  auto gap = [&](double t) { return oy + t * uy - terrain.height_at(ox + t * ux); };
  double t0 = 0.0;
  double g0 = gap(0.0);
  if (g0 <= 0.0) return 0.0;
  while (t0 < max_range) {
    double t1 = max_range;
    if (std::abs(ux) > 1e-12) {
      // Next grid line in the direction of travel.
      const double u = (ox + t0 * ux - terrain.x_begin) / terrain.spacing;
      const double cell = ux > 0.0 ? std::floor(u) + 1.0 : std::ceil(u) - 1.0;
      const double x_next = terrain.x_begin + cell * terrain.spacing;
      t1 = std::min(max_range, std::max((x_next - ox) / ux, t0 + 1e-12));
    }
    const double g1 = gap(t1);
    if (g1 <= 0.0) return t0 + g0 / (g0 - g1) * (t1 - t0);
    t0 = t1;
    g0 = g1;
  }
  return max_range;
}

// Fan of rays from straight down (relative to the hull) to lidar_fan_degrees
// forward, evenly spaced, cast from the hull center.
inline LidarScan lidar_scan(double hull_x, double hull_y, double hull_angle, const Terrain& terrain,
                            const PhysicsConfig& cfg) {
  LidarScan scan{};
  const double fan = cfg.lidar_fan_degrees * std::numbers::pi / 180.0;
  for (std::size_t i = 0; i < kLidarRays; ++i) {
    const double a = hull_angle + fan * static_cast<double>(i) / static_cast<double>(kLidarRays - 1);
    scan[i] = ray_cast(terrain, hull_x, hull_y, std::sin(a), -std::cos(a), cfg.lidar_range);
  }
  return scan;
}

}  // namespace walkrl::walker
