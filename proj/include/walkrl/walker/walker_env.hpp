#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "walkrl/env/environment.hpp"
#include "walkrl/numerics/rng.hpp"
#include "walkrl/walker/config.hpp"
#include "walkrl/walker/dynamics.hpp"
#include "walkrl/walker/lidar.hpp"
#include "walkrl/walker/terrain.hpp"

namespace walkrl::walker {

inline constexpr std::size_t kObservationSize = 24;
inline constexpr std::size_t kActionSize = 4;

// Observation layout:
//   [0] hull angle  [1] hull angular velocity  [2] hull x-velocity  [3] hull y-velocity
//   [4..7] joint angles (hip1, knee1, hip2, knee2)  [8..11] joint angular velocities
//   [12..13] foot contact flags  [14..23] lidar ranges (m)
inline std::vector<double> observe(const WalkerState& s, const Terrain& terrain, const PhysicsConfig& cfg) {
  std::vector<double> obs(kObservationSize);
  obs[0] = s.q[kHullAngle];
  obs[1] = s.v[kHullAngle];
  obs[2] = s.v[kX];
  obs[3] = s.v[kY];
  for (std::size_t j = 0; j < 4; ++j) {
    obs[4 + j] = s.q[kHip1 + j];
    obs[8 + j] = s.v[kHip1 + j];
  }
  obs[12] = s.foot_contact[0] ? 1.0 : 0.0;
  obs[13] = s.foot_contact[1] ? 1.0 : 0.0;
  const auto scan = lidar_scan(s.q[kX], s.q[kY], s.q[kHullAngle], terrain, cfg);
  for (std::size_t i = 0; i < kLidarRays; ++i) obs[14 + i] = scan[i];
  return obs;
}

struct RewardTerms {
  double progress = 0.0;
  double torque = 0.0;
  double fall = 0.0;
  double total() const { return progress + torque + fall; }
};

inline RewardTerms walker_reward_terms(const WalkerState& prev, const WalkerState& next,
                                       std::span<const double> torques, bool fell, const PhysicsConfig& cfg) {
  RewardTerms r;
  r.progress = cfg.progress_scale() * (next.q[kX] - prev.q[kX]);
  double effort = 0.0;
  for (double t : torques) effort += std::abs(std::clamp(t, -1.0, 1.0));
  r.torque = -cfg.torque_cost * effort;
  r.fall = fell ? -cfg.fall_penalty : 0.0;
  return r;
}

inline double walker_reward(const WalkerState& prev, const WalkerState& next, std::span<const double> torques,
                            bool fell, const PhysicsConfig& cfg) {
  return walker_reward_terms(prev, next, torques, fell, cfg).total();
}

inline bool hull_touches_ground(const WalkerModel& model, const WalkerState& s, const Terrain& terrain) {
  for (const auto& c : model.hull_corners(s.q)) {
    if (c.y <= terrain.height_at(c.x)) return true;
  }
  return false;
}

inline Termination check_termination(const WalkerModel& model, const WalkerState& s, const Terrain& terrain,
                                     std::size_t step_count) {
  const auto& cfg = model.config();
  if (hull_touches_ground(model, s, terrain) || std::abs(s.q[kHullAngle]) > cfg.tip_over_angle) {
    return Termination::fell;
  }
  if (s.q[kX] >= terrain.course_length) return Termination::finished;
  if (step_count >= cfg.max_episode_steps) return Termination::timeout;
  return Termination::running;
}

// Reset pose: legs spread front and back with bent knees, hull level, lower
// foot resting on the spawn pad.
inline WalkerState initial_state(const WalkerModel& model, const Terrain& terrain, double hull_vx) {
  WalkerState s;
  const auto& cfg = model.config();
  s.q[kHip1] = cfg.stance_hip_front;
  s.q[kKnee1] = cfg.stance_knee;
  s.q[kHip2] = cfg.stance_hip_rear;
  s.q[kKnee2] = cfg.stance_knee;
  s.q[kY] = 0.0;
  double lowest = 1e9;
  for (std::size_t leg = 0; leg < 2; ++leg) {
    const auto f = model.foot(s.q, leg);
    lowest = std::min(lowest, f.y - terrain.height_at(f.x));
  }
  s.q[kY] = -lowest;
  s.v[kX] = hull_vx;
  for (std::size_t leg = 0; leg < 2; ++leg) {
    s.foot_contact[leg] = ground_gap(terrain, model.foot(s.q, leg)) <= cfg.contact_tolerance;
  }
  return s;
}

// The planar walker behind the standard episode protocol.
class WalkerEnv final : public Environment {
 public:
  explicit WalkerEnv(const PhysicsConfig& cfg = {})
      : cfg_((cfg.validate(), cfg)),
        model_(cfg),
        obs_space_(observation_bounds(cfg)),
        act_space_(SpaceSpec::box(kActionSize, -1.0, 1.0)) {}

  const SpaceSpec& observation_space() const override { return obs_space_; }
  const SpaceSpec& action_space() const override { return act_space_; }
  std::size_t max_episode_steps() const override { return cfg_.max_episode_steps; }

  const PhysicsConfig& config() const { return cfg_; }
  const WalkerModel& model() const { return model_; }
  const WalkerState& state() const { return state_; }
  const Terrain& terrain() const { return terrain_; }
  const RewardTerms& last_reward_terms() const { return last_terms_; }
  const RewardTerms& episode_reward_terms() const { return episode_terms_; }

  // Test hook: replace the simulated state mid-episode.
  void set_state(const WalkerState& s) { state_ = s; }

 protected:
  std::vector<double> do_reset(std::uint64_t seed) override {
    if (terrain_.heights.empty() || terrain_.seed != seed) terrain_ = terrain_generate(seed, cfg_);
    RngStream rng(seed, derive_stream(0x5eedull));
    state_ = initial_state(model_, terrain_, rng.uniform(-cfg_.initial_push, cfg_.initial_push));
    episode_terms_ = {};
    last_terms_ = {};
    return observe(state_, terrain_, cfg_);
  }

  StepOutcome do_step(std::span<const double> action) override {
    const WalkerState prev = state_;
    state_ = physics_step(model_, prev, terrain_, action);
    const auto cause = check_termination(model_, state_, terrain_, steps_taken() + 1);
    last_terms_ = walker_reward_terms(prev, state_, action, cause == Termination::fell, cfg_);
    episode_terms_.progress += last_terms_.progress;
    episode_terms_.torque += last_terms_.torque;
    episode_terms_.fall += last_terms_.fall;
    StepOutcome out;
    out.observation = observe(state_, terrain_, cfg_);
    out.reward = last_terms_.total();
    out.cause = cause;
    out.done = cause != Termination::running;
    return out;
  }

 private:
  static SpaceSpec observation_bounds(const PhysicsConfig& cfg) {
    constexpr double kBig = 1e9;
    std::vector<double> lo(kObservationSize, -kBig);
    std::vector<double> hi(kObservationSize, kBig);
    // limits are solved iteratively, so allow a little overshoot
    constexpr double kSlack = 0.01;
    lo[4] = lo[6] = cfg.hip_min - kSlack;
    hi[4] = hi[6] = cfg.hip_max + kSlack;
    lo[5] = lo[7] = cfg.knee_min - kSlack;
    hi[5] = hi[7] = cfg.knee_max + kSlack;
    lo[12] = lo[13] = 0.0;
    hi[12] = hi[13] = 1.0;
    for (std::size_t i = 14; i < kObservationSize; ++i) {
      lo[i] = 0.0;
      hi[i] = cfg.lidar_range;
    }
    return {lo, hi};
  }

  PhysicsConfig cfg_;
  WalkerModel model_;
  SpaceSpec obs_space_;
  SpaceSpec act_space_;
  Terrain terrain_;
  WalkerState state_;
  RewardTerms last_terms_;
  RewardTerms episode_terms_;
};

}  // namespace walkrl::walker
