#pragma once

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "walkrl/ars/ars.hpp"
#include "walkrl/cli/config.hpp"
#include "walkrl/dqn/dqn.hpp"
#include "walkrl/errors.hpp"
#include "walkrl/harness/checkpoint.hpp"
#include "walkrl/harness/evaluate.hpp"
#include "walkrl/harness/metrics.hpp"

namespace walkrl::cli {

namespace fs = std::filesystem;

inline void ensure_directory(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory " + dir.string());
}

inline void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  out << text;
  out.flush();
  if (!out) throw IoError("cannot write " + path.string());
}

inline void write_episode_csv(const fs::path& path, std::span<const RolloutResult> results) {
  std::ofstream out(path, std::ios::trunc);
  out << "episode,reward,steps,termination,seed\n";
  for (std::size_t k = 0; k < results.size(); ++k) {
    const auto& r = results[k];
    out << k + 1 << ',' << harness::format_double(r.total_reward) << ',' << r.steps << ',' << to_string(r.cause) << ','
        << r.seed << '\n';
  }
  out.flush();
  if (!out) throw IoError("cannot write " + path.string());
}

inline std::string fmt(const char* pattern, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, x);
  return buf;
}

struct TrainSummary {
  std::size_t episodes = 0;
  double wall_seconds = 0.0;
  harness::Summary eval;
  bool solved = false;
};

inline harness::Checkpoint make_checkpoint(const RunConfig& c, std::size_t iteration, std::size_t episodes) {
  harness::Checkpoint ck;
  ck.algorithm = c.algorithm;
  ck.environment = c.environment;
  ck.config = config_json(c);
  ck.iteration = iteration;
  ck.episodes = episodes;
  return ck;
}

inline std::string checkpoint_name(const char* stem, std::size_t n) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%s_%06zu.json", stem, n);
  return buf;
}

// Trains, logs every episode to metrics.csv, checkpoints on iteration/batch
// boundaries, then evaluates the frozen result.
inline TrainSummary cmd_train(const RunConfig& c, std::ostream& out) {
  const fs::path dir = c.out;
  ensure_directory(dir / "checkpoints");
  write_text(dir / "config.ini", config_snapshot(c));
  harness::MetricsLog metrics(dir / "metrics.csv", harness::MetricsLog::Mode::fresh);
  const EnvFactory factory = make_env_factory(c);

  TrainSummary summary;
  std::vector<RolloutResult> results;
  const auto start = std::chrono::steady_clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(); };

  if (c.algorithm == "ars") {
    const std::size_t h = c.ars.directions;
    auto on_iteration = [&](const ars::IterationLog& it, const ars::ArsPolicy& policy) {
      const double wall = elapsed();
      for (std::size_t k = 0; k < it.rewards.size(); ++k) {
        harness::MetricsRow row;
        row.episode = it.episodes - 2 * h + k + 1;
        row.iteration_or_batch = it.iteration;
        row.reward = it.rewards[k];
        row.sigma = it.sigma;
        row.wall_seconds = wall;
        row.seed = ars::pair_episode_seed(c.seed, it.iteration, k / 2);
        metrics.append(row);
      }
      if ((it.iteration + 1) % c.checkpoint_every == 0) {
        auto ck = make_checkpoint(c, it.iteration + 1, it.episodes);
        ck.ars = policy;
        harness::save_checkpoint(dir / "checkpoints" / checkpoint_name("iter", it.iteration + 1), ck);
      }
    };
    auto result = ars::ars_train(c.ars, factory, on_iteration);
    summary.wall_seconds = elapsed();
    summary.episodes = result.log.empty() ? 0 : result.log.back().episodes;
    auto ck = make_checkpoint(c, result.log.size(), summary.episodes);
    ck.ars = result.policy;
    harness::save_checkpoint(dir / "final.json", ck);

    const auto probe = factory();
    const ars::LinearPolicy policy{result.policy.theta, result.policy.stats, probe->action_space()};
    results = harness::evaluate(policy, factory, c.eval_episodes, c.seed, c.workers);
  } else {
    auto on_episode = [&](const dqn::EpisodeLog& e) {
      harness::MetricsRow row;
      row.episode = e.episode;
      row.iteration_or_batch = e.batch;
      row.reward = e.reward;
      row.epsilon = e.epsilon;
      row.wall_seconds = elapsed();
      row.seed = dqn::dqn_episode_seed(c.seed, e.episode - 1);
      metrics.append(row);
    };
    std::size_t episodes_done = 0;
    auto on_batch = [&](std::size_t batch, const dqn::QNetwork& net, double epsilon) {
      episodes_done = std::min(c.dqn.episodes, (batch + 1) * c.dqn.batch_size);
      if ((batch + 1) % c.checkpoint_every == 0) {
        auto ck = make_checkpoint(c, batch + 1, episodes_done);
        ck.dqn = net;
        ck.epsilon = epsilon;
        harness::save_checkpoint(dir / "checkpoints" / checkpoint_name("batch", batch + 1), ck);
      }
    };
    auto result = dqn::dqn_train(c.dqn, factory, on_episode, on_batch);
    summary.wall_seconds = elapsed();
    summary.episodes = result.log.size();
    const std::size_t batches = (summary.episodes + c.dqn.batch_size - 1) / c.dqn.batch_size;
    auto ck = make_checkpoint(c, batches, summary.episodes);
    ck.dqn = result.network;
    ck.epsilon = result.epsilon;
    harness::save_checkpoint(dir / "final.json", ck);

    const auto probe = factory();
    const dqn::GreedyPolicy policy{result.network, dqn::ActionCodec({-1.0, 0.0, 1.0}, probe->action_space().dimension())};
    results = harness::evaluate(policy, factory, c.eval_episodes, c.seed, c.workers);
  }

  write_episode_csv(dir / "eval.csv", results);
  summary.eval = harness::summarize(results);
  summary.solved = harness::solve_check(results);
  out << "train " << c.algorithm << " on " << c.environment << ": episodes " << summary.episodes << ", wall_seconds "
      << fmt("%.2f", summary.wall_seconds) << ", eval mean " << fmt("%.3f", summary.eval.mean) << " over "
      << results.size() << " episodes\n";
  return summary;
}

struct EvalReport {
  harness::Summary summary;
  bool solved = false;
  std::vector<RolloutResult> results;
};

inline void print_summary(std::ostream& out, const harness::Summary& s, bool solved) {
  out << "episodes: " << s.episodes << '\n'
      << "mean: " << fmt("%.4f", s.mean) << '\n'
      << "std: " << fmt("%.4f", s.stddev) << '\n'
      << "min: " << fmt("%.4f", s.min) << '\n'
      << "max: " << fmt("%.4f", s.max) << '\n'
      << "solved: " << (solved ? "true" : "false") << '\n';
}

inline EvalReport evaluate_checkpoint(const harness::Checkpoint& ck, std::size_t n, std::uint64_t seed,
                                      std::size_t workers) {
  RunConfig c;
  try {
    c = config_from_json(ck.config);
  } catch (const ConfigError& e) {
    throw CorruptCheckpointError(std::string("checkpoint config is invalid: ") + e.what());
  } catch (const nlohmann::json::exception& e) {
    throw CorruptCheckpointError(std::string("checkpoint config is malformed: ") + e.what());
  }
  if (c.environment != ck.environment || c.algorithm != ck.algorithm) {
    throw CorruptCheckpointError("checkpoint tags disagree with its config snapshot");
  }
  const EnvFactory factory = make_env_factory(c);
  const auto probe = factory();
  const std::size_t n_obs = probe->observation_space().dimension();
  const std::size_t n_act = probe->action_space().dimension();

  EvalReport rep;
  if (ck.ars) {
    if (ck.ars->theta.rows() != n_act || ck.ars->theta.cols() != n_obs) {
      throw ShapeMismatchError("checkpoint theta shape does not fit the " + c.environment + " environment");
    }
    const ars::LinearPolicy policy{ck.ars->theta, ck.ars->stats, probe->action_space()};
    rep.results = harness::evaluate(policy, factory, n, seed, workers);
  } else if (ck.dqn) {
    const dqn::ActionCodec codec({-1.0, 0.0, 1.0}, n_act);
    if (ck.dqn->inputs() != n_obs || ck.dqn->outputs() != codec.size()) {
      throw ShapeMismatchError("checkpoint network shape does not fit the " + c.environment + " environment");
    }
    const dqn::GreedyPolicy policy{*ck.dqn, codec};
    rep.results = harness::evaluate(policy, factory, n, seed, workers);
  } else {
    throw CorruptCheckpointError("checkpoint holds no policy");
  }
  rep.summary = harness::summarize(rep.results);
  rep.solved = harness::solve_check(rep.results);
  return rep;
}

inline EvalReport cmd_eval(const fs::path& checkpoint, std::size_t n, std::uint64_t seed, const fs::path& out_dir,
                           std::size_t workers, std::ostream& out) {
  const auto ck = harness::load_checkpoint(checkpoint);
  auto rep = evaluate_checkpoint(ck, n, seed, workers);
  ensure_directory(out_dir);
  write_episode_csv(out_dir / "eval.csv", rep.results);
  print_summary(out, rep.summary, rep.solved);
  return rep;
}

inline std::vector<harness::BaselineReport> cmd_bench(const RunConfig& c, std::size_t n, std::ostream& out) {
  const fs::path dir = c.out;
  ensure_directory(dir);
  const auto reports = harness::bench_baselines(make_env_factory(c.environment, c.physics, 4), n, c.seed, c.workers);
  char line[128];
  std::snprintf(line, sizeof line, "%-11s %10s %10s %10s %10s  %s\n", "policy", "mean", "std", "min", "max", "solved");
  out << line;
  for (const auto& r : reports) {
    write_episode_csv(dir / ("bench_" + r.name + ".csv"), r.results);
    std::snprintf(line, sizeof line, "%-11s %10.3f %10.3f %10.3f %10.3f  %s\n", r.name.c_str(), r.summary.mean,
                  r.summary.stddev, r.summary.min, r.summary.max,
                  harness::solve_check(r.results) ? "true" : "false");
    out << line;
  }
  return reports;
}

}  // namespace walkrl::cli
