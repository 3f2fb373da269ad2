#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "walkrl/numerics/rng.hpp"
#include "walkrl/walker/config.hpp"

namespace walkrl::walker {

// Piecewise-linear heightfield on a uniform x grid. Heights beyond either end
// are held constant.
struct Terrain {
  double x_begin = 0.0;
  double spacing = 0.5;
  std::vector<double> heights;
  double course_length = 0.0;
  std::uint64_t seed = 0;

  double x_end() const { return x_begin + spacing * static_cast<double>(heights.size() - 1); }

  double height_at(double x) const {
    const double u = (x - x_begin) / spacing;
    if (!(u > 0.0)) return heights.front();
    const auto last = static_cast<double>(heights.size() - 1);
    if (u >= last) return heights.back();
    const auto i = static_cast<std::size_t>(u);
    const double f = u - static_cast<double>(i);
    return heights[i] + f * (heights[i + 1] - heights[i]);
  }

  double slope_at(double x) const {
    const double u = (x - x_begin) / spacing;
    if (!(u > 0.0) || u >= static_cast<double>(heights.size() - 1)) return 0.0;
    const auto i = static_cast<std::size_t>(u);
    return (heights[i + 1] - heights[i]) / spacing;
  }

  double x_at(std::size_t i) const { return x_begin + spacing * static_cast<double>(i); }

  friend bool operator==(const Terrain&, const Terrain&) = default;
};

// Flat pad centred on the spawn point (x = 0), then a smoothed random walk
// whose per-sample slope never exceeds cfg.terrain_max_slope. The grid runs
// from 5 m behind the spawn to the finish line plus lidar range.
inline Terrain terrain_generate(std::uint64_t seed, const PhysicsConfig& cfg) {
  Terrain t;
  t.seed = seed;
  t.spacing = cfg.terrain_spacing;
  t.course_length = cfg.course_length;
  t.x_begin = -5.0;
  const double span = cfg.course_length + cfg.lidar_range + 5.0 - t.x_begin;
  const auto n = static_cast<std::size_t>(std::ceil(span / t.spacing)) + 1;
  t.heights.assign(n, 0.0);

  RngStream rng(seed, derive_stream(0x7e77a1ull));
  const double max_step = cfg.terrain_max_slope * t.spacing;
  const double pad_end = 0.5 * cfg.spawn_pad;
  double y = 0.0;
  double velocity = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (t.x_at(i) <= pad_end) {
      t.heights[i] = 0.0;
      continue;
    }
    // Mean-reverting smoothed walk.
    velocity = 0.8 * velocity + 0.6 * max_step * rng.uniform(-1.0, 1.0) - 0.1 * y;
    velocity = std::clamp(velocity, -max_step, max_step);
    y = std::clamp(y + velocity, -cfg.terrain_amplitude, cfg.terrain_amplitude);
    t.heights[i] = y;
  }
  return t;
}

}  // namespace walkrl::walker
