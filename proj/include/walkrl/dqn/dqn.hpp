#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "walkrl/dqn/action_codec.hpp"
#include "walkrl/dqn/q_network.hpp"
#include "walkrl/env/environment.hpp"
#include "walkrl/errors.hpp"
#include "walkrl/numerics/rng.hpp"

namespace walkrl::dqn {

struct DqnConfig {
  double alpha = 0.001;
  double gamma = 0.99;
  double epsilon_start = 1.0;
  double epsilon_decay = 0.995;
  double epsilon_floor = 0.05;
  std::size_t batch_size = 50;  // episodes per target refresh
  std::size_t episodes = 10000;
  std::size_t hidden = 55;
  std::size_t action_bins = 3;
  std::uint64_t seed = 1;

  void validate() const {
    if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ConfigError("dqn: alpha must be > 0");
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("dqn: gamma must lie in [0, 1]");
    if (!(epsilon_decay > 0.0 && epsilon_decay <= 1.0)) throw ConfigError("dqn: epsilon decay must lie in (0, 1]");
    if (!(epsilon_start >= 0.0 && epsilon_start <= 1.0)) throw ConfigError("dqn: epsilon start must lie in [0, 1]");
    if (!(epsilon_floor >= 0.0 && epsilon_floor <= 1.0)) throw ConfigError("dqn: epsilon floor must lie in [0, 1]");
    if (batch_size < 1) throw ConfigError("dqn: batch size must be >= 1");
    if (hidden < 1) throw ConfigError("dqn: hidden width must be >= 1");
    if (action_bins != 3) throw ConfigError("dqn: only 3 action bins are supported");
  }
};

// Lowest index among the maxima.
inline std::size_t argmax(std::span<const double> u) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < u.size(); ++i) {
    if (u[i] > u[best]) best = i;
  }
  return best;
}

inline std::size_t epsilon_greedy(const QNetwork& net, std::span<const double> obs, double epsilon, RngStream& rng) {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw ConfigError("epsilon_greedy: epsilon must lie in [0, 1]");
  // Draw the coin every call so the stream position does not depend on epsilon.
  const double coin = rng.uniform();
  const std::size_t random_index = static_cast<std::size_t>(rng.below(net.outputs()));
  if (coin < epsilon) return random_index;
  return argmax(q_forward(net, obs));
}

inline double compute_target(double reward, bool done, double gamma, const QNetwork& target_net,
                             std::span<const double> next_obs) {
  if (done || gamma == 0.0) return reward;
  const auto u = q_forward(target_net, next_obs);
  return reward + gamma * *std::max_element(u.begin(), u.end());
}

inline double decay_epsilon(double epsilon, const DqnConfig& cfg) {
  return std::max(cfg.epsilon_floor, epsilon * cfg.epsilon_decay);
}

struct EpisodeLog {
  std::size_t episode = 0;  // 1-based, cumulative
  std::size_t batch = 0;
  double reward = 0.0;
  double epsilon = 0.0;
  std::size_t steps = 0;
};

struct DqnResult {
  QNetwork network;
  double epsilon = 0.0;
  std::vector<EpisodeLog> log;
};

// Greedy policy over a network; holds a reference.
struct GreedyPolicy {
  const QNetwork& net;
  ActionCodec codec;

  std::vector<double> operator()(std::span<const double> obs, StepContext) const {
    return codec.decode(argmax(q_forward(net, obs)));
  }
};

inline constexpr std::uint64_t kExploreTag = 0xe9510;
inline constexpr std::uint64_t kDqnEpisodeTag = 0xd9e;

inline std::uint64_t dqn_episode_seed(std::uint64_t seed, std::size_t episode) {
  return derive_stream(kDqnEpisodeTag ^ seed, episode);
}

using EpisodeCallback = std::function<void(const EpisodeLog&)>;
using BatchCallback = std::function<void(std::size_t batch, const QNetwork&, double epsilon)>;

// Episodes run in batches; each batch decays epsilon, freezes a copy of the
// network for targets, then updates online after every step.
inline DqnResult dqn_train(const DqnConfig& cfg, const EnvFactory& make_env, const EpisodeCallback& on_episode = {},
                           const BatchCallback& on_batch = {}) {
  cfg.validate();
  auto env = make_env();
  const ActionCodec codec({-1.0, 0.0, 1.0}, env->action_space().dimension());
  DqnResult result;
  result.network = make_network(env->observation_space().dimension(), cfg.hidden, cfg.hidden, codec.size(), cfg.seed);
  result.epsilon = cfg.epsilon_start;
  RngStream explore(cfg.seed, derive_stream(kExploreTag));

  std::size_t episode = 0;
  for (std::size_t batch = 0; episode < cfg.episodes; ++batch) {
    result.epsilon = decay_epsilon(result.epsilon, cfg);
    const QNetwork target = result.network;
    for (std::size_t k = 0; k < cfg.batch_size && episode < cfg.episodes; ++k) {
      EpisodeLog entry;
      entry.batch = batch;
      entry.epsilon = result.epsilon;
      auto obs = env->reset(dqn_episode_seed(cfg.seed, episode));
      while (true) {
        const std::size_t a = epsilon_greedy(result.network, obs, result.epsilon, explore);
        StepOutcome out = env->step(codec.decode(a));
        const double y = compute_target(out.reward, out.done, cfg.gamma, target, out.observation);
        q_gradient_step(result.network, obs, a, y, cfg.alpha);
        entry.reward += out.reward;
        ++entry.steps;
        if (out.done) break;
        obs = std::move(out.observation);
      }
      if (!result.network.all_finite()) throw DivergenceError("dqn_train: non-finite network parameters");
      entry.episode = ++episode;
      if (on_episode) on_episode(entry);
      result.log.push_back(entry);
    }
    if (on_batch) on_batch(batch, result.network, result.epsilon);
  }
  return result;
}

}  // namespace walkrl::dqn
