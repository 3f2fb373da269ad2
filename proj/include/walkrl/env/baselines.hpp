#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "walkrl/env/environment.hpp"
#include "walkrl/numerics/rng.hpp"

namespace walkrl {

// Uniform sample from the action box at every step, ignoring the state.
// Stateless: the action at (episode seed, step) is a pure function of them.
class RandomPolicy {
 public:
  RandomPolicy(std::uint64_t seed, SpaceSpec action_space)
      : seed_(seed), space_(std::move(action_space)) {}

  std::vector<double> operator()(std::span<const double>, StepContext ctx) const {
    RngStream rng(seed_, derive_stream(0xa11ce, ctx.episode_seed));
    const std::size_t dim = space_.dimension();
    rng.seek(static_cast<std::uint64_t>(ctx.step) * dim);
    std::vector<double> a(dim);
    for (std::size_t i = 0; i < dim; ++i) a[i] = rng.uniform(space_.lower[i], space_.upper[i]);
    return a;
  }

 private:
  std::uint64_t seed_;
  SpaceSpec space_;
};

// Fixed 40-step inching cycle on the 4-joint walker (hip1, knee1, hip2, knee2):
// leg 1 swings forward then back for 10 steps each, then leg 2 does the same.
class PeriodicPolicy {
 public:
  static constexpr std::size_t kPhase = 10;
  static constexpr std::size_t kCycle = 4 * kPhase;

  std::vector<double> operator()(std::span<const double>, StepContext ctx) const {
    const std::size_t phase = (ctx.step % kCycle) / kPhase;
    std::vector<double> a(4, 0.0);
    const std::size_t hip = phase < 2 ? 0 : 2;
    const double dir = (phase % 2 == 0) ? 1.0 : -1.0;
    a[hip] = dir;
    a[hip + 1] = -dir;
    return a;
  }
};

// One step forward with leg 1, then zero torque for the rest of the episode.
class StationaryPolicy {
 public:
  static constexpr std::size_t kPrefix = 15;

  std::vector<double> operator()(std::span<const double>, StepContext ctx) const {
    if (ctx.step < kPrefix) return {0.5, -0.5, 0.0, 0.0};
    return {0.0, 0.0, 0.0, 0.0};
  }
};

class ConstantPolicy {
 public:
  explicit ConstantPolicy(std::vector<double> action) : action_(std::move(action)) {}
  std::vector<double> operator()(std::span<const double>, StepContext) const { return action_; }

 private:
  std::vector<double> action_;
};

}  // namespace walkrl
