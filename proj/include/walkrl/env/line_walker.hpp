#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "walkrl/env/environment.hpp"

namespace walkrl {

// 1-D kinematic point with a closed-form optimum:
//   x' = x + speed * a[0],  reward = (x' - x) - effort_cost * sum_i |a[i]|
// The constant policy a = (1, 0, ...) earns horizon * (speed - effort_cost),
// 9.8 with the defaults. Extra action coordinates only cost effort; they let
// the same environment stand in for the 4-joint walker under the DQN codec.
//
// Observation: (x, x' - x), position and signed velocity. The velocity gives a
// bias-free normalized linear policy a way to keep pushing forward. It reads
// the nominal speed at reset; with (0, 0) there every linear policy outputs 0
// and the point never moves.
class LineWalker final : public Environment {
 public:
  static constexpr double kSpeed = 0.05;
  static constexpr double kEffortCost = 0.001;
  static constexpr std::size_t kHorizon = 200;

  explicit LineWalker(std::size_t action_dim = 1)
      : obs_space_({-1e9, -kSpeed}, {1e9, kSpeed}), act_space_(SpaceSpec::box(action_dim, -1.0, 1.0)) {}

  const SpaceSpec& observation_space() const override { return obs_space_; }
  const SpaceSpec& action_space() const override { return act_space_; }
  std::size_t max_episode_steps() const override { return kHorizon; }

  double position() const { return x_; }

  // Return of a constant action held for the full horizon.
  static double constant_action_return(std::span<const double> a) {
    double effort = 0.0;
    for (double ai : a) effort += std::abs(std::clamp(ai, -1.0, 1.0));
    return static_cast<double>(kHorizon) * (kSpeed * std::clamp(a[0], -1.0, 1.0) - kEffortCost * effort);
  }

 protected:
  std::vector<double> do_reset(std::uint64_t) override {
    x_ = 0.0;
    speed_ = kSpeed;
    return {x_, speed_};
  }

  StepOutcome do_step(std::span<const double> a) override {
    const double prev = x_;
    x_ = prev + kSpeed * a[0];
    speed_ = x_ - prev;
    double effort = 0.0;
    for (double ai : a) effort += std::abs(ai);
    StepOutcome out;
    out.observation = {x_, speed_};
    out.reward = (x_ - prev) - kEffortCost * effort;
    return out;
  }

 private:
  SpaceSpec obs_space_;
  SpaceSpec act_space_;
  double x_ = 0.0;
  double speed_ = 0.0;
};

}  // namespace walkrl
