// walkrl: train, eval and bench from the command line.
//
// Exit codes: 0 ok, 2 config error, 3 training aborted (non-finite values),
// 4 I/O or checkpoint error.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "walkrl/cli/commands.hpp"
#include "walkrl/cli/config.hpp"
#include "walkrl/errors.hpp"

namespace {

using walkrl::cli::Override;

struct FlagSpec {
  const char* flag;
  const char* key;  // bare keys follow --algo into [ars] or [dqn]
  const char* help;
};

const std::vector<FlagSpec> kTrainFlags = {
    {"--env", "run.env", "walker | line-walker | quadratic-regulator"},
    {"--algo", "run.algorithm", "ars | dqn"},
    {"--seed", "run.seed", "master seed"},
    {"--out", "run.out", "output directory"},
    {"--workers", "run.workers", "rollout threads (results do not depend on it)"},
    {"--alpha", "alpha", "step size"},
    {"--noise-v", "ars.noise_v", "ARS exploration noise"},
    {"--h", "ars.h", "ARS directions per iteration"},
    {"--m", "ars.m", "ARS top directions used (m <= h)"},
    {"--iters", "ars.iterations", "ARS iterations"},
    {"--gamma", "dqn.gamma", "DQN discount"},
    {"--epsilon-decay", "dqn.epsilon_decay", "DQN per-batch epsilon factor"},
    {"--batch-size", "dqn.batch_size", "DQN episodes per target refresh"},
    {"--episodes", "episodes", "episode budget (ARS: rollouts, overrides --iters)"},
};

struct Collected {
  std::vector<std::pair<const FlagSpec*, std::string>> values;
  std::vector<std::string> sets;
};

void add_flags(CLI::App* cmd, const std::vector<FlagSpec>& specs, Collected& into) {
  into.values.reserve(specs.size());
  for (const auto& s : specs) {
    into.values.emplace_back(&s, std::string());
    cmd->add_option(s.flag, into.values.back().second, s.help);
  }
  cmd->add_option("--set", into.sets, "extra override, section.key=value (repeatable)");
}

std::vector<Override> overrides_of(CLI::App* cmd, const Collected& c) {
  std::vector<Override> out;
  for (const auto& [spec, value] : c.values) {
    if (cmd->count(spec->flag) > 0) out.push_back({spec->key, value, std::string("flag ") + spec->flag});
  }
  for (const auto& s : c.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || s.find('.') > eq) {
      throw walkrl::ConfigParseError("flag --set: expected section.key=value, got '" + s + "'");
    }
    out.push_back({s.substr(0, eq), s.substr(eq + 1), "flag --set " + s.substr(0, eq)});
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Random search and Q-learning on a planar walker"};
  // -h would clash with the --h (directions) flag
  app.set_help_flag("--help", "print this help and exit");
  app.require_subcommand(1);

  std::string config_path;
  auto* train = app.add_subcommand("train", "train a policy");
  train->add_option("--config", config_path, "config file")->check(CLI::ExistingFile);
  Collected train_flags;
  add_flags(train, kTrainFlags, train_flags);

  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  std::string checkpoint;
  std::size_t eval_n = 100;
  std::uint64_t eval_seed = 1;
  std::string eval_out;
  std::size_t eval_workers = 1;
  eval->add_option("checkpoint", checkpoint, "checkpoint file")->required();
  eval->add_option("--episodes", eval_n, "episodes to run");
  eval->add_option("--seed", eval_seed, "evaluation seed");
  eval->add_option("--out", eval_out, "directory for eval.csv (default: next to the checkpoint)");
  eval->add_option("--workers", eval_workers, "threads");

  auto* bench = app.add_subcommand("bench", "run the scripted baselines");
  std::string bench_config;
  std::size_t bench_n = 1000;
  bench->add_option("--config", bench_config, "config file")->check(CLI::ExistingFile);
  bench->add_option("--episodes", bench_n, "episodes per baseline");
  const std::vector<FlagSpec> bench_specs = {kTrainFlags[0], kTrainFlags[2], kTrainFlags[3], kTrainFlags[4]};
  Collected bench_flags;
  add_flags(bench, bench_specs, bench_flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (train->parsed()) {
      const auto cfg = walkrl::cli::parse_config(config_path, overrides_of(train, train_flags));
      walkrl::cli::cmd_train(cfg, std::cout);
    } else if (eval->parsed()) {
      if (eval_n < 1) throw walkrl::ConstraintError("eval: --episodes must be >= 1");
      const std::filesystem::path ck(checkpoint);
      const std::filesystem::path out = eval_out.empty() ? ck.parent_path() / "eval" : std::filesystem::path(eval_out);
      walkrl::cli::cmd_eval(ck, eval_n, eval_seed, out, eval_workers < 1 ? 1 : eval_workers, std::cout);
    } else if (bench->parsed()) {
      if (bench_n < 1) throw walkrl::ConstraintError("bench: --episodes must be >= 1");
      auto flags = overrides_of(bench, bench_flags);
      if (bench->count("--out") == 0) flags.push_back({"run.out", "bench", "default"});
      const auto cfg = walkrl::cli::parse_config(bench_config, flags);
      walkrl::cli::cmd_bench(cfg, bench_n, std::cout);
    }
  } catch (const walkrl::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const walkrl::DivergenceError& e) {
    std::cerr << "training aborted: " << e.what() << '\n';
    return 3;
  } catch (const walkrl::IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return 4;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
