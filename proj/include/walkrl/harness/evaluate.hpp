#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "walkrl/env/baselines.hpp"
#include "walkrl/env/environment.hpp"
#include "walkrl/errors.hpp"
#include "walkrl/numerics/rng.hpp"

namespace walkrl::harness {

inline constexpr std::uint64_t kEvalTag = 0xe7a1;

inline std::uint64_t evaluation_seed(std::uint64_t seed, std::size_t episode) {
  return derive_stream(kEvalTag ^ seed, episode);
}

// n seeded episodes of a frozen policy. Workers take episodes round-robin and
// results land by episode index, so the output does not depend on `workers`.
template <PolicyFor Policy>
std::vector<RolloutResult> evaluate(const Policy& policy, const EnvFactory& make_env, std::size_t n,
                                    std::uint64_t seed, std::size_t workers = 1) {
  if (n < 1) throw ConfigError("evaluate: need at least one episode");
  workers = std::clamp<std::size_t>(workers, 1, n);
  std::vector<RolloutResult> out(n);
  auto work = [&](std::size_t w) {
    auto env = make_env();
    for (std::size_t k = w; k < n; k += workers) {
      out[k] = run_episode(*env, policy, evaluation_seed(seed, k), env->max_episode_steps());
    }
  };
  if (workers == 1) {
    work(0);
    return out;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  for (std::size_t w = 0; w < workers; ++w) {
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
  return out;
}

// True iff some run of `window` consecutive episodes averages at least `threshold`.
inline bool solve_check(std::span<const RolloutResult> results, std::size_t window = 100, double threshold = 300.0) {
  if (window == 0 || results.size() < window) return false;
  double sum = 0.0;
  for (std::size_t i = 0; i < window; ++i) sum += results[i].total_reward;
  const double need = threshold * static_cast<double>(window);
  if (sum >= need) return true;
  for (std::size_t i = window; i < results.size(); ++i) {
    sum += results[i].total_reward - results[i - window].total_reward;
    if (sum >= need) return true;
  }
  return false;
}

struct Summary {
  std::size_t episodes = 0;
  double mean = 0.0;
  double stddev = 0.0;
  double min = 0.0;
  double max = 0.0;
  double bucket_width = 10.0;
  std::map<long, std::size_t> histogram;  // bucket index b covers [b*w, (b+1)*w)

  friend bool operator==(const Summary&, const Summary&) = default;
};

inline Summary summarize(std::span<const RolloutResult> results, double bucket_width = 10.0) {
  Summary s;
  s.bucket_width = bucket_width;
  s.episodes = results.size();
  if (results.empty()) return s;
  s.min = s.max = results[0].total_reward;
  double sum = 0.0;
  for (const auto& r : results) {
    sum += r.total_reward;
    s.min = std::min(s.min, r.total_reward);
    s.max = std::max(s.max, r.total_reward);
    ++s.histogram[static_cast<long>(std::floor(r.total_reward / bucket_width))];
  }
  s.mean = sum / static_cast<double>(results.size());
  double ss = 0.0;
  for (const auto& r : results) ss += (r.total_reward - s.mean) * (r.total_reward - s.mean);
  s.stddev = std::sqrt(ss / static_cast<double>(results.size()));
  return s;
}

// Buckets strictly taller than both neighbours (missing neighbours count as 0),
// returned as bucket centers.
inline std::vector<double> histogram_modes(const Summary& s) {
  std::vector<double> modes;
  auto count = [&](long b) {
    const auto it = s.histogram.find(b);
    return it == s.histogram.end() ? std::size_t{0} : it->second;
  };
  for (const auto& [b, c] : s.histogram) {
    if (c > count(b - 1) && c >= count(b + 1) && c > 0) modes.push_back((static_cast<double>(b) + 0.5) * s.bucket_width);
  }
  return modes;
}

struct BaselineReport {
  std::string name;
  Summary summary;
  std::vector<RolloutResult> results;
};

// Random, periodic and stationary policies, n episodes each on the same seeds.
inline std::vector<BaselineReport> bench_baselines(const EnvFactory& make_env, std::size_t n, std::uint64_t seed,
                                                   std::size_t workers = 1) {
  const auto probe = make_env();
  const SpaceSpec actions = probe->action_space();
  if (actions.dimension() != 4) throw ConfigError("bench_baselines: the scripted baselines drive the 4-joint walker");
  std::vector<BaselineReport> out;
  auto add = [&](std::string name, auto policy) {
    BaselineReport rep;
    rep.name = std::move(name);
    rep.results = evaluate(policy, make_env, n, seed, workers);
    rep.summary = summarize(rep.results);
    out.push_back(std::move(rep));
  };
  add("random", RandomPolicy(seed, actions));
  add("periodic", PeriodicPolicy{});
  add("stationary", StationaryPolicy{});
  return out;
}

}  // namespace walkrl::harness
