#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "walkrl/ars/ars.hpp"
#include "walkrl/dqn/q_network.hpp"
#include "walkrl/errors.hpp"
#include "walkrl/numerics/matrix.hpp"
#include "walkrl/numerics/stats.hpp"

namespace walkrl::harness {

inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  int version = kCheckpointVersion;
  std::string algorithm;    // "ars" or "dqn"
  std::string environment;  // walker, line-walker, quadratic-regulator
  nlohmann::json config = nlohmann::json::object();
  std::size_t iteration = 0;  // ARS iterations or DQN batches completed
  std::size_t episodes = 0;
  std::optional<ars::ArsPolicy> ars;
  std::optional<dqn::QNetwork> dqn;
  double epsilon = 0.0;
};

namespace detail {

inline nlohmann::json matrix_json(const Matrix& m) {
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::vector<double>(m.values().begin(), m.values().end())}};
}

inline Matrix matrix_from(const nlohmann::json& j, const char* what) {
  const auto rows = j.at("rows").get<std::size_t>();
  const auto cols = j.at("cols").get<std::size_t>();
  auto data = j.at("data").get<std::vector<double>>();
  if (rows == 0 || cols == 0 || data.size() != rows * cols) {
    throw ShapeMismatchError(std::string("checkpoint: ") + what + " data does not match its declared shape");
  }
  return Matrix(rows, cols, std::move(data));
}

inline void require_finite(const std::vector<double>& v, const char* what) {
  for (double x : v) {
    if (!std::isfinite(x)) throw CorruptCheckpointError(std::string("checkpoint: non-finite value in ") + what);
  }
}

}  // namespace detail

inline nlohmann::json checkpoint_json(const Checkpoint& c) {
  nlohmann::json j;
  j["format_version"] = c.version;
  j["algorithm"] = c.algorithm;
  j["environment"] = c.environment;
  j["config"] = c.config;
  j["iteration"] = c.iteration;
  j["episodes"] = c.episodes;
  if (c.ars) {
    j["theta"] = detail::matrix_json(c.ars->theta);
    j["stats"] = {{"count", c.ars->stats.count()}, {"mean", c.ars->stats.mean()}, {"m2", c.ars->stats.m2()}};
  }
  if (c.dqn) {
    auto layers = nlohmann::json::array();
    for (const auto& l : c.dqn->layers) layers.push_back({{"weights", detail::matrix_json(l.weights)}, {"bias", l.bias}});
    j["layers"] = layers;
    j["epsilon"] = c.epsilon;
  }
  return j;
}

inline Checkpoint checkpoint_from_json(const nlohmann::json& j) {
  Checkpoint c;
  try {
    c.version = j.at("format_version").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw CorruptCheckpointError(std::string("checkpoint: missing format version: ") + e.what());
  }
  if (c.version != kCheckpointVersion) {
    throw VersionMismatchError("checkpoint: format version " + std::to_string(c.version) + ", expected " +
                               std::to_string(kCheckpointVersion));
  }
  try {
    c.algorithm = j.at("algorithm").get<std::string>();
    c.environment = j.at("environment").get<std::string>();
    c.config = j.at("config");
    c.iteration = j.at("iteration").get<std::size_t>();
    c.episodes = j.at("episodes").get<std::size_t>();
    if (c.algorithm == "ars") {
      Matrix theta = detail::matrix_from(j.at("theta"), "theta");
      detail::require_finite(std::vector<double>(theta.values().begin(), theta.values().end()), "theta");
      const auto& s = j.at("stats");
      auto mean = s.at("mean").get<std::vector<double>>();
      auto m2 = s.at("m2").get<std::vector<double>>();
      if (mean.size() != theta.cols() || m2.size() != theta.cols()) {
        throw ShapeMismatchError("checkpoint: observation stats dimension differs from theta columns");
      }
      c.ars = ars::ArsPolicy(std::move(theta), RunningStats(s.at("count").get<std::size_t>(), mean, m2));
    } else if (c.algorithm == "dqn") {
      const auto& layers = j.at("layers");
      if (!layers.is_array() || layers.size() != 3) throw ShapeMismatchError("checkpoint: expected 3 network layers");
      dqn::QNetwork net;
      for (std::size_t k = 0; k < 3; ++k) {
        net.layers[k].weights = detail::matrix_from(layers[k].at("weights"), "layer weights");
        net.layers[k].bias = layers[k].at("bias").get<std::vector<double>>();
        if (net.layers[k].bias.size() != net.layers[k].weights.rows()) {
          throw ShapeMismatchError("checkpoint: bias length differs from layer width");
        }
        if (k > 0 && net.layers[k].weights.cols() != net.layers[k - 1].weights.rows()) {
          throw ShapeMismatchError("checkpoint: consecutive layer shapes do not chain");
        }
      }
      if (!net.all_finite()) throw CorruptCheckpointError("checkpoint: non-finite network parameter");
      c.dqn = std::move(net);
      c.epsilon = j.at("epsilon").get<double>();
    } else {
      throw CorruptCheckpointError("checkpoint: unknown algorithm tag '" + c.algorithm + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw CorruptCheckpointError(std::string("checkpoint: malformed content: ") + e.what());
  } catch (const DimensionError& e) {
    throw ShapeMismatchError(std::string("checkpoint: ") + e.what());
  }
  return c;
}

// Written to a sibling temp file and renamed, so a reader never sees half a file.
inline void save_checkpoint(const std::filesystem::path& path, const Checkpoint& c) {
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw IoError("save_checkpoint: cannot open " + tmp.string() + " for writing");
    out << checkpoint_json(c).dump(1) << '\n';
    out.flush();
    if (!out) throw IoError("save_checkpoint: write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("save_checkpoint: cannot move checkpoint into place: " + ec.message());
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("load_checkpoint: cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(buf.str());
  } catch (const nlohmann::json::parse_error& e) {
    throw CorruptCheckpointError("load_checkpoint: " + path.string() + " is not a complete checkpoint: " + e.what());
  }
  return checkpoint_from_json(j);
}

}  // namespace walkrl::harness
