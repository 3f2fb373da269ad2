#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "walkrl/env/environment.hpp"
#include "walkrl/errors.hpp"
#include "walkrl/numerics/matrix.hpp"
#include "walkrl/numerics/rng.hpp"
#include "walkrl/numerics/stats.hpp"

namespace walkrl::ars {

struct ArsConfig {
  double alpha = 0.02;
  double noise = 0.03;
  std::size_t directions = 16;  // h
  std::size_t top = 8;          // m
  std::size_t iterations = 100;
  std::size_t episode_budget = 0;  // when nonzero, stop once this many rollouts have run
  std::uint64_t seed = 1;
  double failure_penalty = -100.0;
  std::size_t workers = 1;

  void validate() const {
    if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ConfigError("ars: alpha must be > 0");
    if (!(noise > 0.0) || !std::isfinite(noise)) throw ConfigError("ars: noise v must be > 0");
    if (directions < 1) throw ConfigError("ars: h must be >= 1");
    if (top < 1 || top > directions) throw ConfigError("ars: constraint m <= h violated (1 <= m <= h)");
    if (workers < 1) throw ConfigError("ars: workers must be >= 1");
    if (!std::isfinite(failure_penalty)) throw ConfigError("ars: failure penalty must be finite");
  }

  // Iterations actually run: the rollout budget, when set, wins.
  std::size_t planned_iterations() const {
    if (episode_budget == 0) return iterations;
    const std::size_t per = 2 * directions;
    return (episode_budget + per - 1) / per;
  }
};

struct ArsPolicy {
  Matrix theta;
  RunningStats stats;

  ArsPolicy() = default;
  ArsPolicy(std::size_t actions, std::size_t observations) : theta(actions, observations), stats(observations) {}
  ArsPolicy(Matrix t, RunningStats s) : theta(std::move(t)), stats(std::move(s)) {
    if (stats.dim() != theta.cols()) throw DimensionError("ArsPolicy: stats dimension must equal theta columns");
  }
};

// action = clip(theta * normalize(obs)).
inline std::vector<double> ars_act(const Matrix& theta, const RunningStats& stats, std::span<const double> obs,
                                   const SpaceSpec& bounds) {
  if (obs.size() != theta.cols()) {
    throw DimensionError("ars_act: observation has " + std::to_string(obs.size()) + " entries, theta expects " +
                         std::to_string(theta.cols()));
  }
  const auto z = stats.normalize(obs);
  auto a = matvec(theta, z);
  return bounds.clip(a);
}

inline std::vector<double> ars_act(const ArsPolicy& p, std::span<const double> obs, const SpaceSpec& bounds) {
  return ars_act(p.theta, p.stats, obs, bounds);
}

// Callable view used for rollouts; holds references, so keep the sources alive.
struct LinearPolicy {
  const Matrix& theta;
  const RunningStats& stats;
  const SpaceSpec& bounds;

  std::vector<double> operator()(std::span<const double> obs, StepContext) const {
    return ars_act(theta, stats, obs, bounds);
  }
};

inline constexpr std::uint64_t kDirectionTag = 0xd1ec7;
inline constexpr std::uint64_t kEpisodeTag = 0xe915;

inline Matrix sample_direction(std::uint64_t seed, std::uint64_t iteration, std::size_t index, std::size_t rows,
                               std::size_t cols) {
  RngStream rng(seed, derive_stream(kDirectionTag, iteration, index));
  return gaussian_matrix(rng, rows, cols);
}

inline std::vector<Matrix> sample_directions(std::uint64_t seed, std::uint64_t iteration, std::size_t h,
                                             std::size_t rows, std::size_t cols) {
  if (h < 1) throw ConfigError("sample_directions: h must be >= 1");
  std::vector<Matrix> out;
  out.reserve(h);
  for (std::size_t i = 0; i < h; ++i) out.push_back(sample_direction(seed, iteration, i, rows, cols));
  return out;
}

// Both rollouts of a pair share this seed.
inline std::uint64_t pair_episode_seed(std::uint64_t seed, std::uint64_t iteration, std::size_t index) {
  return derive_stream(kEpisodeTag ^ seed, iteration, index);
}

struct DirectionRecord {
  std::size_t index = 0;
  Matrix delta;
  double reward_plus = 0.0;
  double reward_minus = 0.0;

  double best() const { return std::max(reward_plus, reward_minus); }
};

// Observations seen by one rollout, to be merged into the shared statistics later.
struct PairObservations {
  RunningStats plus;
  RunningStats minus;
};

namespace detail {

inline double perturbed_rollout(Environment& env, const ArsPolicy& policy, const Matrix& delta, double scale,
                                std::uint64_t episode_seed, double failure_penalty, RunningStats& seen) {
  Matrix theta = policy.theta;
  theta.add_scaled(delta, scale);
  const LinearPolicy pol{theta, policy.stats, env.action_space()};
  try {
    const auto r = run_episode(env, pol, episode_seed, env.max_episode_steps(),
                               [&](std::span<const double> obs) { seen.update(obs); });
    return r.total_reward;
  } catch (const DivergenceError&) {
    return failure_penalty;
  }
}

}  // namespace detail

// Runs theta + v*delta and theta - v*delta on the same episode seed.
inline DirectionRecord evaluate_direction(Environment& env, const ArsPolicy& policy, std::size_t index,
                                          const Matrix& delta, double noise, std::uint64_t episode_seed,
                                          double failure_penalty, PairObservations* seen = nullptr) {
  if (!policy.theta.same_shape(delta)) throw DimensionError("evaluate_direction: delta shape differs from theta");
  PairObservations local{RunningStats(policy.theta.cols()), RunningStats(policy.theta.cols())};
  PairObservations& obs = seen ? *seen : local;
  DirectionRecord rec;
  rec.index = index;
  rec.delta = delta;
  rec.reward_plus = detail::perturbed_rollout(env, policy, delta, noise, episode_seed, failure_penalty, obs.plus);
  rec.reward_minus = detail::perturbed_rollout(env, policy, delta, -noise, episode_seed, failure_penalty, obs.minus);
  return rec;
}

// The m records with the largest max(r+, r-), best first; ties keep the lower index.
inline std::vector<DirectionRecord> select_top(std::vector<DirectionRecord> records, std::size_t m) {
  if (m > records.size()) throw ConfigError("select_top: m exceeds the number of records");
  std::sort(records.begin(), records.end(), [](const DirectionRecord& a, const DirectionRecord& b) {
    if (a.best() != b.best()) return a.best() > b.best();
    return a.index < b.index;
  });
  records.resize(m);
  return records;
}

// theta += alpha / (m * sigma) * sum (r+ - r-) * delta
inline Matrix ars_update(const Matrix& theta, const std::vector<DirectionRecord>& selected, double sigma,
                         double alpha) {
  if (selected.empty()) throw ConfigError("ars_update: no selected directions");
  if (!(sigma > 0.0)) throw ConfigError("ars_update: sigma must be positive");
  Matrix step(theta.rows(), theta.cols());
  for (const auto& rec : selected) {
    if (!rec.delta.same_shape(theta)) throw DimensionError("ars_update: delta shape differs from theta");
    step.add_scaled(rec.delta, rec.reward_plus - rec.reward_minus);
  }
  Matrix next = theta;
  next.add_scaled(step, alpha / (static_cast<double>(selected.size()) * sigma));
  if (!next.all_finite()) throw DivergenceError("ars_update: non-finite theta after update");
  return next;
}

inline ArsPolicy ars_update(const ArsPolicy& policy, const std::vector<DirectionRecord>& selected, double sigma,
                            const ArsConfig& cfg) {
  ArsPolicy next = policy;
  next.theta = ars_update(policy.theta, selected, sigma, cfg.alpha);
  return next;
}

struct IterationLog {
  std::size_t iteration = 0;
  std::size_t episodes = 0;  // cumulative, after this iteration
  double mean_reward = 0.0;
  double sigma = 0.0;
  std::vector<double> rewards;  // r+_0, r-_0, r+_1, r-_1, ...
};

struct ArsResult {
  ArsPolicy policy;
  std::vector<IterationLog> log;
};

using IterationCallback = std::function<void(const IterationLog&, const ArsPolicy&)>;

// One full ARS iteration. Rollouts fan out over cfg.workers environments;
// stats are merged in direction order so the outcome does not depend on it.
inline IterationLog ars_iteration(const ArsConfig& cfg, std::vector<std::unique_ptr<Environment>>& envs,
                                  ArsPolicy& policy, std::size_t iteration, std::size_t episodes_before) {
  const std::size_t h = cfg.directions;
  const std::size_t dim = policy.theta.cols();
  std::vector<DirectionRecord> records(h);
  std::vector<PairObservations> seen(h, PairObservations{RunningStats(dim), RunningStats(dim)});
  const auto deltas = sample_directions(cfg.seed, iteration, h, policy.theta.rows(), policy.theta.cols());

  auto work = [&](std::size_t worker) {
    for (std::size_t i = worker; i < h; i += envs.size()) {
      records[i] = evaluate_direction(*envs[worker], policy, i, deltas[i], cfg.noise,
                                      pair_episode_seed(cfg.seed, iteration, i), cfg.failure_penalty, &seen[i]);
    }
  };
  if (envs.size() == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(envs.size());
    for (std::size_t w = 0; w < envs.size(); ++w) {
      pool.emplace_back([&, w] {
        try {
          work(w);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  IterationLog entry;
  entry.iteration = iteration;
  entry.episodes = episodes_before + 2 * h;
  entry.rewards.reserve(2 * h);
  for (const auto& r : records) {
    entry.rewards.push_back(r.reward_plus);
    entry.rewards.push_back(r.reward_minus);
  }
  double sum = 0.0;
  for (double r : entry.rewards) sum += r;
  entry.mean_reward = sum / static_cast<double>(entry.rewards.size());
  entry.sigma = std_of(entry.rewards);

  const auto top = select_top(records, cfg.top);
  policy.theta = ars_update(policy.theta, top, entry.sigma, cfg.alpha);
  for (const auto& s : seen) {
    policy.stats.merge(s.plus);
    policy.stats.merge(s.minus);
  }
  return entry;
}

inline ArsResult ars_train(const ArsConfig& cfg, const EnvFactory& make_env, const IterationCallback& on_iteration = {},
                           ArsPolicy initial = {}) {
  cfg.validate();
  std::vector<std::unique_ptr<Environment>> envs;
  for (std::size_t w = 0; w < cfg.workers; ++w) envs.push_back(make_env());
  const std::size_t n_act = envs[0]->action_space().dimension();
  const std::size_t n_obs = envs[0]->observation_space().dimension();

  ArsResult result;
  result.policy = initial.theta.empty() ? ArsPolicy(n_act, n_obs) : std::move(initial);
  if (result.policy.theta.rows() != n_act || result.policy.theta.cols() != n_obs) {
    throw DimensionError("ars_train: initial theta shape does not match the environment");
  }
  std::size_t episodes = 0;
  const std::size_t iterations = cfg.planned_iterations();
  for (std::size_t it = 0; it < iterations; ++it) {
    auto entry = ars_iteration(cfg, envs, result.policy, it, episodes);
    episodes = entry.episodes;
    if (on_iteration) on_iteration(entry, result.policy);
    result.log.push_back(std::move(entry));
  }
  return result;
}

}  // namespace walkrl::ars
