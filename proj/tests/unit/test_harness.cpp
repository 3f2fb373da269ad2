#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "walkrl/ars/ars.hpp"
#include "walkrl/dqn/dqn.hpp"
#include "walkrl/env/baselines.hpp"
#include "walkrl/env/line_walker.hpp"
#include "walkrl/errors.hpp"
#include "walkrl/harness/checkpoint.hpp"
#include "walkrl/harness/evaluate.hpp"
#include "walkrl/harness/metrics.hpp"
#include "walkrl/walker/walker_env.hpp"

using namespace walkrl;
using namespace walkrl::harness;
namespace fs = std::filesystem;

namespace {

std::vector<RolloutResult> with_rewards(const std::vector<double>& rewards) {
  std::vector<RolloutResult> out;
  for (double r : rewards) out.push_back(RolloutResult{r, 1, Termination::timeout, 0});
  return out;
}

bool brute_force_solved(const std::vector<RolloutResult>& rs, std::size_t window, double threshold) {
  for (std::size_t s = 0; s + window <= rs.size(); ++s) {
    double sum = 0.0;
    for (std::size_t i = s; i < s + window; ++i) sum += rs[i].total_reward;
    if (sum / static_cast<double>(window) >= threshold) return true;
  }
  return false;
}

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() / ("walkrl_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter_++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  static inline int counter_ = 0;
  fs::path path_;
};

std::vector<std::string> lines_of(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::string> out;
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

EnvFactory line_walker4() {
  return [] { return std::make_unique<LineWalker>(4); };
}

}  // namespace

TEST(SolveCheck, ExactlyThreeHundredSolves) { EXPECT_TRUE(solve_check(with_rewards(std::vector<double>(100, 300.0)))); }

TEST(SolveCheck, ShortWindowNeverSolves) { EXPECT_FALSE(solve_check(with_rewards(std::vector<double>(99, 400.0)))); }

TEST(SolveCheck, AlternatingAveragesExactly300) {
  std::vector<double> r;
  for (int i = 0; i < 200; ++i) r.push_back(i % 2 == 0 ? 299.0 : 301.0);
  EXPECT_TRUE(solve_check(with_rewards(r)));
}

TEST(SolveCheck, JustBelowThresholdFails) {
  std::vector<double> r(150, 300.0);
  r[0] = r[50] = r[100] = 299.0;
  EXPECT_FALSE(solve_check(with_rewards(r)));
}

TEST(SolveCheck, MatchesBruteForceOnRandomInputs) {
  RngStream rng(77, 0);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 1 + rng.below(40);
    const std::size_t window = 1 + rng.below(12);
    std::vector<double> r(n);
    for (double& x : r) x = static_cast<double>(rng.below(7));  // integers keep sums exact
    const auto rs = with_rewards(r);
    EXPECT_EQ(solve_check(rs, window, 3.0), brute_force_solved(rs, window, 3.0)) << "trial " << trial;
  }
}

TEST(Summary, MomentsAndHistogram) {
  const auto s = summarize(with_rewards({-105.0, -95.0, -5.0, -3.0, 2.0}));
  EXPECT_EQ(s.episodes, 5u);
  EXPECT_DOUBLE_EQ(s.mean, -41.2);
  EXPECT_EQ(s.min, -105.0);
  EXPECT_EQ(s.max, 2.0);
  EXPECT_EQ(s.histogram.at(-11), 1u);
  EXPECT_EQ(s.histogram.at(-10), 1u);
  EXPECT_EQ(s.histogram.at(-1), 2u);
  EXPECT_EQ(s.histogram.at(0), 1u);
}

TEST(Summary, ModesAreLocalPeaks) {
  std::vector<double> r;
  for (int i = 0; i < 30; ++i) r.push_back(-5.0);
  for (int i = 0; i < 10; ++i) r.push_back(5.0);
  for (int i = 0; i < 20; ++i) r.push_back(-100.5);
  const auto modes = histogram_modes(summarize(with_rewards(r)));
  ASSERT_EQ(modes.size(), 2u);
  EXPECT_DOUBLE_EQ(modes[0], -105.0);
  EXPECT_DOUBLE_EQ(modes[1], -5.0);
}

TEST(Evaluate, RepeatableAndIndependentOfWorkers) {
  const walker::PhysicsConfig cfg;
  const EnvFactory factory = [cfg] { return std::make_unique<walker::WalkerEnv>(cfg); };
  const RandomPolicy policy(3, SpaceSpec::box(4, -1.0, 1.0));
  const auto a = evaluate(policy, factory, 6, 5);
  const auto b = evaluate(policy, factory, 6, 5);
  const auto c = evaluate(policy, factory, 6, 5, 4);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a, c);
  EXPECT_THROW(evaluate(policy, factory, 0, 5), ConfigError);
}

TEST(Evaluate, ZeroTorqueOnWalkerNeverPositive) {
  const EnvFactory factory = [] { return std::make_unique<walker::WalkerEnv>(); };
  for (const auto& r : evaluate(ConstantPolicy(std::vector<double>(4, 0.0)), factory, 10, 2)) {
    EXPECT_LE(r.total_reward, 0.0);
    EXPECT_TRUE(r.cause == Termination::fell || r.cause == Termination::timeout);
  }
}

TEST(Evaluate, MaxStepsZeroIsEmptyTimeout) {
  LineWalker env;
  const auto r = run_episode(env, ConstantPolicy({1.0}), 0, 0);
  EXPECT_EQ(r.steps, 0u);
  EXPECT_EQ(r.total_reward, 0.0);
  EXPECT_EQ(r.cause, Termination::timeout);
}

TEST(Bench, ThreeBaselinesDeterministic) {
  const auto a = bench_baselines(line_walker4(), 20, 3);
  const auto b = bench_baselines(line_walker4(), 20, 3);
  ASSERT_EQ(a.size(), 3u);
  EXPECT_EQ(a[0].name, "random");
  EXPECT_EQ(a[1].name, "periodic");
  EXPECT_EQ(a[2].name, "stationary");
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(a[i].summary, b[i].summary);
    EXPECT_EQ(a[i].results.size(), 20u);
    EXPECT_LT(a[i].summary.mean, 300.0);
  }
  EXPECT_THROW(bench_baselines([] { return std::make_unique<LineWalker>(1); }, 5, 1), ConfigError);
}

TEST(Metrics, HeaderOnceThenRows) {
  TempDir dir;
  const auto path = dir.path() / "m.csv";
  append_metrics(path, MetricsRow{1, 0, 2.0, 1.5, std::nullopt, 0.1, 9});
  append_metrics(path, MetricsRow{2, 0, 3.0, 1.5, std::nullopt, 0.2, 9});
  const auto lines = lines_of(path);
  ASSERT_EQ(lines.size(), 3u);
  EXPECT_EQ(lines[0], kMetricsHeader);
}

TEST(Metrics, RowRoundTrips) {
  MetricsRow row{3, 1, 12.5, std::nullopt, 0.9801, 4.25, 17};
  const auto back = parse_metrics_row(format_metrics_row(row));
  EXPECT_EQ(back, row);
  MetricsRow ars{5, 2, -0.1, 0.30000000000000004, std::nullopt, 0.0, 1};
  EXPECT_EQ(parse_metrics_row(format_metrics_row(ars)), ars);
  EXPECT_EQ(format_metrics_row(row), "3,1,12.5,,0.9801,4.250000,17");
}

TEST(Metrics, EpisodesMustIncrease) {
  TempDir dir;
  MetricsLog log(dir.path() / "m.csv");
  log.append(MetricsRow{1, 0, 0.0, {}, {}, 0.0, 0});
  EXPECT_THROW(log.append(MetricsRow{1, 0, 0.0, {}, {}, 0.0, 0}), IoError);
  EXPECT_THROW(log.append(MetricsRow{2, 0, std::nan(""), {}, {}, 0.0, 0}), IoError);
}

TEST(Metrics, SecondWriterIsRefused) {
  TempDir dir;
  MetricsLog first(dir.path() / "m.csv");
  EXPECT_THROW(MetricsLog second(dir.path() / "m.csv"), LockError);
}

TEST(Metrics, UnwritablePathReported) {
  EXPECT_THROW(MetricsLog("/nonexistent_dir_walkrl/m.csv"), IoError);
}

TEST(Metrics, FreshModeStartsOver) {
  TempDir dir;
  const auto path = dir.path() / "m.csv";
  append_metrics(path, MetricsRow{1, 0, 2.0, {}, {}, 0.0, 0});
  { MetricsLog log(path, MetricsLog::Mode::fresh); }
  EXPECT_EQ(lines_of(path).size(), 1u);
}

TEST(Metrics, RowsSurviveWithoutClose) {
  TempDir dir;
  const auto path = dir.path() / "m.csv";
  MetricsLog log(path);
  log.append(MetricsRow{1, 0, 2.0, {}, {}, 0.0, 0});
  EXPECT_EQ(lines_of(path).size(), 2u);  // still open, already on disk
}

namespace {

Checkpoint ars_checkpoint() {
  RngStream rng(4, 4);
  ars::ArsPolicy p(gaussian_matrix(rng, 4, 24), RunningStats(24));
  for (int i = 0; i < 5; ++i) {
    std::vector<double> obs(24);
    for (double& x : obs) x = rng.normal() * 1e3;
    p.stats.update(obs);
  }
  Checkpoint c;
  c.algorithm = "ars";
  c.environment = "walker";
  c.config = {{"ars", {{"alpha", "0.02"}}}};
  c.iteration = 12;
  c.episodes = 384;
  c.ars = p;
  return c;
}

}  // namespace

TEST(Checkpoint, ArsRoundTripIsBitExact) {
  TempDir dir;
  const auto c = ars_checkpoint();
  save_checkpoint(dir.path() / "c.json", c);
  const auto back = load_checkpoint(dir.path() / "c.json");
  ASSERT_TRUE(back.ars);
  EXPECT_EQ(back.ars->theta, c.ars->theta);
  EXPECT_EQ(back.ars->stats.mean(), c.ars->stats.mean());
  EXPECT_EQ(back.ars->stats.m2(), c.ars->stats.m2());
  EXPECT_EQ(back.ars->stats.count(), 5u);
  EXPECT_EQ(back.iteration, 12u);
  EXPECT_EQ(back.episodes, 384u);
  EXPECT_EQ(back.config, c.config);
  EXPECT_FALSE(fs::exists(dir.path() / "c.json.tmp"));
}

TEST(Checkpoint, DqnRoundTripKeepsGreedyBehaviour) {
  TempDir dir;
  dqn::DqnConfig cfg;
  cfg.episodes = 10;
  cfg.batch_size = 5;
  const auto trained = dqn::dqn_train(cfg, line_walker4());
  Checkpoint c;
  c.algorithm = "dqn";
  c.environment = "line-walker";
  c.dqn = trained.network;
  c.epsilon = trained.epsilon;
  save_checkpoint(dir.path() / "d.json", c);
  const auto back = load_checkpoint(dir.path() / "d.json");
  ASSERT_TRUE(back.dqn);
  EXPECT_EQ(*back.dqn, trained.network);
  EXPECT_EQ(back.epsilon, trained.epsilon);
  const dqn::GreedyPolicy before{trained.network, dqn::ActionCodec()};
  const dqn::GreedyPolicy after{*back.dqn, dqn::ActionCodec()};
  EXPECT_EQ(evaluate(before, line_walker4(), 5, 1), evaluate(after, line_walker4(), 5, 1));
}

TEST(Checkpoint, OldVersionRefused) {
  auto j = checkpoint_json(ars_checkpoint());
  j["format_version"] = 0;
  EXPECT_THROW(checkpoint_from_json(j), VersionMismatchError);
}

TEST(Checkpoint, TruncatedFileIsCorrupt) {
  TempDir dir;
  save_checkpoint(dir.path() / "c.json", ars_checkpoint());
  std::stringstream whole;
  whole << std::ifstream(dir.path() / "c.json").rdbuf();
  const std::string text = whole.str();
  std::ofstream(dir.path() / "cut.json") << text.substr(0, text.size() / 2);
  EXPECT_THROW(load_checkpoint(dir.path() / "cut.json"), CorruptCheckpointError);
}

TEST(Checkpoint, ShapeMismatchReported) {
  auto j = checkpoint_json(ars_checkpoint());
  j["theta"]["cols"] = 23;
  EXPECT_THROW(checkpoint_from_json(j), ShapeMismatchError);
  auto k = checkpoint_json(ars_checkpoint());
  k["stats"]["mean"].erase(0);
  EXPECT_THROW(checkpoint_from_json(k), ShapeMismatchError);
}

TEST(Checkpoint, MissingFileIsIoError) {
  EXPECT_THROW(load_checkpoint("/nonexistent_walkrl/c.json"), IoError);
}
