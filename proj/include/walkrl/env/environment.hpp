#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "walkrl/errors.hpp"

namespace walkrl {

struct SpaceSpec {
  std::vector<double> lower;
  std::vector<double> upper;

  SpaceSpec() = default;
  SpaceSpec(std::vector<double> lo, std::vector<double> hi) : lower(std::move(lo)), upper(std::move(hi)) {
    if (lower.empty() || lower.size() != upper.size()) {
      throw DimensionError("SpaceSpec: bound vectors must be non-empty and equal length");
    }
    for (std::size_t i = 0; i < lower.size(); ++i) {
      if (!(lower[i] <= upper[i])) throw DimensionError("SpaceSpec: lower bound exceeds upper bound");
    }
  }

  static SpaceSpec box(std::size_t dim, double lo, double hi) {
    return {std::vector<double>(dim, lo), std::vector<double>(dim, hi)};
  }

  std::size_t dimension() const { return lower.size(); }

  bool contains(std::span<const double> x) const {
    if (x.size() != dimension()) return false;
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (!(x[i] >= lower[i] && x[i] <= upper[i])) return false;
    }
    return true;
  }

  std::vector<double> clip(std::span<const double> x) const {
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = std::clamp(x[i], lower[i], upper[i]);
    return out;
  }
};

enum class Termination { running, fell, finished, timeout };

constexpr std::string_view to_string(Termination t) {
  switch (t) {
    case Termination::running: return "running";
    case Termination::fell: return "fell";
    case Termination::finished: return "finished";
    case Termination::timeout: return "timeout";
  }
  return "unknown";
}

struct StepOutcome {
  std::vector<double> observation;
  double reward = 0.0;
  bool done = false;
  Termination cause = Termination::running;
};

struct RolloutResult {
  double total_reward = 0.0;
  std::size_t steps = 0;
  Termination cause = Termination::timeout;
  std::uint64_t seed = 0;

  friend bool operator==(const RolloutResult&, const RolloutResult&) = default;
};

// Episode protocol shared by every environment: reset, then step until done.
// The base class owns protocol checks and action clipping; subclasses only
// implement the transition on an already-clipped action.
class Environment {
 public:
  virtual ~Environment() = default;

  virtual const SpaceSpec& observation_space() const = 0;
  virtual const SpaceSpec& action_space() const = 0;
  virtual std::size_t max_episode_steps() const = 0;

  std::vector<double> reset(std::uint64_t seed) {
    auto obs = do_reset(seed);
    active_ = true;
    steps_ = 0;
    return obs;
  }

  StepOutcome step(std::span<const double> action) {
    if (!active_) throw ProtocolError("step called before reset or after episode end");
    if (action.size() != action_space().dimension()) {
      throw DimensionError("action dimension " + std::to_string(action.size()) + " != " +
                           std::to_string(action_space().dimension()));
    }
    for (double a : action) {
      if (std::isnan(a)) throw ProtocolError("NaN in action");
    }
    const auto clipped = action_space().clip(action);
    StepOutcome out = do_step(clipped);
    ++steps_;
    if (!out.done && steps_ >= max_episode_steps()) {
      out.done = true;
      out.cause = Termination::timeout;
    }
    if (out.done) active_ = false;
    return out;
  }

  std::size_t steps_taken() const { return steps_; }
  bool active() const { return active_; }

 protected:
  virtual std::vector<double> do_reset(std::uint64_t seed) = 0;
  virtual StepOutcome do_step(std::span<const double> action) = 0;

 private:
  bool active_ = false;
  std::size_t steps_ = 0;
};

using EnvFactory = std::function<std::unique_ptr<Environment>()>;

// Everything a stateless policy may condition on besides the observation.
struct StepContext {
  std::uint64_t episode_seed = 0;
  std::size_t step = 0;
};

template <class P>
concept PolicyFor = requires(const P& p, std::span<const double> obs, StepContext ctx) {
  { p(obs, ctx) } -> std::convertible_to<std::vector<double>>;
};

struct NoObserver {
  void operator()(std::span<const double>) const {}
};

// Runs one episode of at most max_steps steps. `observe` sees every
// observation handed to the policy, in order.
template <PolicyFor Policy, class Observer = NoObserver>
RolloutResult run_episode(Environment& env, const Policy& policy, std::uint64_t seed,
                          std::size_t max_steps, Observer&& observe = {}) {
  RolloutResult result;
  result.seed = seed;
  result.cause = Termination::timeout;
  auto obs = env.reset(seed);
  while (result.steps < max_steps) {
    observe(std::span<const double>(obs));
    const std::vector<double> action = policy(obs, StepContext{seed, result.steps});
    StepOutcome out = env.step(action);
    result.total_reward += out.reward;
    ++result.steps;
    if (out.done) {
      result.cause = out.cause;
      return result;
    }
    obs = std::move(out.observation);
  }
  return result;
}

}  // namespace walkrl
