#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "walkrl/env/environment.hpp"
#include "walkrl/numerics/rng.hpp"

namespace walkrl {

// Discrete-time linear system s' = A s + B a with stable A and reward -|s'|^2.
// The initial state is drawn uniformly from [-1, 1]^2 per seed.
class QuadraticRegulator final : public Environment {
 public:
  static constexpr double kA[2][2] = {{0.98, 0.1}, {0.0, 0.95}};
  static constexpr double kB[2] = {0.0, 0.1};
  static constexpr std::size_t kHorizon = 50;

  QuadraticRegulator()
      : obs_space_({-1e9, -1e9}, {1e9, 1e9}), act_space_(SpaceSpec::box(1, -1.0, 1.0)) {}

  const SpaceSpec& observation_space() const override { return obs_space_; }
  const SpaceSpec& action_space() const override { return act_space_; }
  std::size_t max_episode_steps() const override { return kHorizon; }

  static std::vector<double> initial_state(std::uint64_t seed) {
    RngStream rng(seed, derive_stream(0x5152ull));
    const double s0 = rng.uniform(-1.0, 1.0);
    const double s1 = rng.uniform(-1.0, 1.0);
    return {s0, s1};
  }

 protected:
  std::vector<double> do_reset(std::uint64_t seed) override {
    s_ = initial_state(seed);
    return s_;
  }

  StepOutcome do_step(std::span<const double> a) override {
    const double n0 = kA[0][0] * s_[0] + kA[0][1] * s_[1] + kB[0] * a[0];
    const double n1 = kA[1][0] * s_[0] + kA[1][1] * s_[1] + kB[1] * a[0];
    s_ = {n0, n1};
    StepOutcome out;
    out.observation = s_;
    out.reward = -(n0 * n0 + n1 * n1);
    return out;
  }

 private:
  SpaceSpec obs_space_;
  SpaceSpec act_space_;
  std::vector<double> s_{0.0, 0.0};
};

}  // namespace walkrl
