#pragma once

#include <charconv>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <string_view>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "walkrl/ars/ars.hpp"
#include "walkrl/dqn/dqn.hpp"
#include "walkrl/env/line_walker.hpp"
#include "walkrl/env/quadratic_regulator.hpp"
#include "walkrl/errors.hpp"
#include "walkrl/walker/config.hpp"
#include "walkrl/walker/walker_env.hpp"

namespace walkrl::cli {

static_assert(std::is_same_v<std::size_t, std::uint64_t>, "seed and count fields share one integer kind");

struct RunConfig {
  std::string algorithm = "ars";  // ars | dqn
  std::string environment = "walker";
  std::uint64_t seed = 1;
  std::string out = "run";
  std::size_t checkpoint_every = 10;  // iterations (ARS) or batches (DQN)
  std::size_t eval_episodes = 100;
  std::size_t workers = 1;

  ars::ArsConfig ars;
  dqn::DqnConfig dqn;
  walker::PhysicsConfig physics;
};

// (section, key) -> field. One table drives parsing, flags and the snapshot.
using FieldRef = std::variant<double*, int*, std::size_t*, std::string*>;

struct Field {
  std::string section;
  std::string key;
  FieldRef ref;
};

inline std::vector<Field> config_fields(RunConfig& c) {
  auto& p = c.physics;
  return {
      {"run", "algorithm", &c.algorithm},
      {"run", "env", &c.environment},
      {"run", "seed", &c.seed},
      {"run", "out", &c.out},
      {"run", "checkpoint_every", &c.checkpoint_every},
      {"run", "eval_episodes", &c.eval_episodes},
      {"run", "workers", &c.workers},

      {"ars", "alpha", &c.ars.alpha},
      {"ars", "noise_v", &c.ars.noise},
      {"ars", "h", &c.ars.directions},
      {"ars", "m", &c.ars.top},
      {"ars", "iterations", &c.ars.iterations},
      {"ars", "episodes", &c.ars.episode_budget},
      {"ars", "failure_penalty", &c.ars.failure_penalty},

      {"dqn", "alpha", &c.dqn.alpha},
      {"dqn", "gamma", &c.dqn.gamma},
      {"dqn", "epsilon_start", &c.dqn.epsilon_start},
      {"dqn", "epsilon_decay", &c.dqn.epsilon_decay},
      {"dqn", "epsilon_floor", &c.dqn.epsilon_floor},
      {"dqn", "batch_size", &c.dqn.batch_size},
      {"dqn", "episodes", &c.dqn.episodes},
      {"dqn", "hidden", &c.dqn.hidden},
      {"dqn", "action_bins", &c.dqn.action_bins},

      {"physics", "dt", &p.dt},
      {"physics", "gravity", &p.gravity},
      {"physics", "substeps", &p.substeps},
      {"physics", "solver_iterations", &p.solver_iterations},
      {"physics", "solver_tolerance", &p.solver_tolerance},
      {"physics", "hull_mass", &p.hull_mass},
      {"physics", "hull_width", &p.hull_width},
      {"physics", "hull_height", &p.hull_height},
      {"physics", "hull_inertia", &p.hull_inertia},
      {"physics", "hip_offset", &p.hip_offset},
      {"physics", "thigh_mass", &p.thigh_mass},
      {"physics", "thigh_length", &p.thigh_length},
      {"physics", "shank_mass", &p.shank_mass},
      {"physics", "shank_length", &p.shank_length},
      {"physics", "motor_torque", &p.motor_torque},
      {"physics", "hip_speed", &p.hip_speed},
      {"physics", "knee_speed", &p.knee_speed},
      {"physics", "hip_min", &p.hip_min},
      {"physics", "hip_max", &p.hip_max},
      {"physics", "knee_min", &p.knee_min},
      {"physics", "knee_max", &p.knee_max},
      {"physics", "friction", &p.friction},
      {"physics", "contact_tolerance", &p.contact_tolerance},
      {"physics", "terrain_spacing", &p.terrain_spacing},
      {"physics", "terrain_max_slope", &p.terrain_max_slope},
      {"physics", "terrain_amplitude", &p.terrain_amplitude},
      {"physics", "spawn_pad", &p.spawn_pad},
      {"physics", "course_length", &p.course_length},
      {"physics", "finish_reward", &p.finish_reward},
      {"physics", "torque_cost", &p.torque_cost},
      {"physics", "fall_penalty", &p.fall_penalty},
      {"physics", "tip_over_angle", &p.tip_over_angle},
      {"physics", "lidar_range", &p.lidar_range},
      {"physics", "lidar_fan_degrees", &p.lidar_fan_degrees},
      {"physics", "stance_hip_front", &p.stance_hip_front},
      {"physics", "stance_hip_rear", &p.stance_hip_rear},
      {"physics", "stance_knee", &p.stance_knee},
      {"physics", "initial_push", &p.initial_push},
      {"physics", "max_episode_steps", &p.max_episode_steps},
  };
}

inline bool known_section(std::string_view s) { return s == "run" || s == "ars" || s == "dqn" || s == "physics"; }

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <class T>
bool parse_number(const std::string& text, T& out) {
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (first != last && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last && first != last;
}

inline std::string format_value(const FieldRef& ref) {
  return std::visit(
      [](auto* p) -> std::string {
        using T = std::remove_pointer_t<decltype(p)>;
        if constexpr (std::is_same_v<T, std::string>) {
          return *p;
        } else if constexpr (std::is_same_v<T, double>) {
          char buf[32];
          for (int precision = 1; precision <= 17; ++precision) {
            std::snprintf(buf, sizeof buf, "%.*g", precision, *p);
            if (std::strtod(buf, nullptr) == *p) break;
          }
          return buf;
        } else {
          return std::to_string(*p);
        }
      },
      ref);
}

}  // namespace detail

// `where` prefixes error messages, e.g. "line 7" or "flag --alpha".
inline void assign_field(const Field& f, const std::string& text, const std::string& where) {
  const std::string name = f.section + "." + f.key;
  std::visit(
      [&](auto* p) {
        using T = std::remove_pointer_t<decltype(p)>;
        if constexpr (std::is_same_v<T, std::string>) {
          if (text.empty()) throw TypeMismatchError(where + ": " + name + " expects a non-empty string");
          *p = text;
        } else {
          T v{};
          if (!detail::parse_number(text, v)) {
            const char* kind = std::is_same_v<T, double> ? "a real number"
                               : std::is_same_v<T, int> ? "an integer"
                                                        : "a non-negative integer";
            throw TypeMismatchError(where + ": " + name + " expects " + kind + ", got '" + text + "'");
          }
          *p = v;
        }
      },
      f.ref);
}

inline void set_value(RunConfig& c, const std::string& section, const std::string& key, const std::string& text,
                      const std::string& where) {
  if (!known_section(section)) throw UnknownKeyError(where + ": unknown section [" + section + "]");
  for (const auto& f : config_fields(c)) {
    if (f.section == section && f.key == key) {
      assign_field(f, text, where);
      return;
    }
  }
  throw UnknownKeyError(where + ": unknown key '" + key + "' in [" + section + "]");
}

// Applies "key = value" lines under [section] headers; '#' and ';' start comments.
inline void apply_config_text(RunConfig& c, const std::string& text, const std::string& origin = "config") {
  std::istringstream in(text);
  std::string raw;
  std::string section;
  std::vector<std::string> seen;
  for (std::size_t line_no = 1; std::getline(in, raw); ++line_no) {
    const std::string where = origin + " line " + std::to_string(line_no);
    std::string line = raw;
    const auto hash = line.find_first_of("#;");
    if (hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigParseError(where + ": unterminated section header");
      section = detail::trim(std::string_view(line).substr(1, line.size() - 2));
      if (!known_section(section)) throw UnknownKeyError(where + ": unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigParseError(where + ": expected 'key = value'");
    const std::string key = detail::trim(std::string_view(line).substr(0, eq));
    const std::string value = detail::trim(std::string_view(line).substr(eq + 1));
    if (key.empty()) throw ConfigParseError(where + ": missing key before '='");
    if (section.empty()) throw ConfigParseError(where + ": key '" + key + "' appears before any [section]");
    const std::string full = section + "." + key;
    for (const auto& s : seen) {
      if (s == full) throw ConfigParseError(where + ": duplicate key " + full);
    }
    seen.push_back(full);
    set_value(c, section, key, value, where);
  }
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// A command-line override. `key` is either "section.key" or a bare trainer key
// such as "alpha", which lands in the section of the selected algorithm.
struct Override {
  std::string key;
  std::string value;
  std::string flag;  // for messages
};

inline void check_constraints(const RunConfig& c) {
  if (c.algorithm != "ars" && c.algorithm != "dqn") {
    throw ConstraintError("run.algorithm must be ars or dqn, got '" + c.algorithm + "'");
  }
  if (c.environment != "walker" && c.environment != "line-walker" && c.environment != "quadratic-regulator") {
    throw ConstraintError("run.env must be walker, line-walker or quadratic-regulator, got '" + c.environment + "'");
  }
  if (c.checkpoint_every < 1) throw ConstraintError("run.checkpoint_every must be >= 1");
  if (c.eval_episodes < 1) throw ConstraintError("run.eval_episodes must be >= 1");
  if (c.workers < 1) throw ConstraintError("run.workers must be >= 1");
  try {
    if (c.algorithm == "ars") {
      if (c.ars.top > c.ars.directions) {
        throw ConfigError("constraint m ≤ h violated (m=" + std::to_string(c.ars.top) +
                          ", h=" + std::to_string(c.ars.directions) + ")");
      }
      c.ars.validate();
    } else {
      c.dqn.validate();
    }
    c.physics.validate();
  } catch (const ConstraintError&) {
    throw;
  } catch (const ConfigError& e) {
    throw ConstraintError(e.what());
  }
}

// Defaults < file < overrides, then constraint checks. The master seed and
// worker count are copied into the trainer configs.
inline RunConfig parse_config(const std::filesystem::path& file, const std::vector<Override>& overrides) {
  RunConfig c;
  if (!file.empty()) apply_config_text(c, read_text_file(file), file.string());
  // Qualified keys first so --algo decides where bare trainer keys go.
  for (const auto& o : overrides) {
    const auto dot = o.key.find('.');
    if (dot != std::string::npos) set_value(c, o.key.substr(0, dot), o.key.substr(dot + 1), o.value, o.flag);
  }
  for (const auto& o : overrides) {
    if (o.key.find('.') == std::string::npos) set_value(c, c.algorithm == "dqn" ? "dqn" : "ars", o.key, o.value, o.flag);
  }
  c.ars.seed = c.dqn.seed = c.seed;
  c.ars.workers = c.workers;
  check_constraints(c);
  return c;
}

inline RunConfig parse_config_text(const std::string& text) {
  RunConfig c;
  apply_config_text(c, text);
  c.ars.seed = c.dqn.seed = c.seed;
  c.ars.workers = c.workers;
  check_constraints(c);
  return c;
}

// Resolved config as config-file text: [run], the active trainer, [physics].
inline std::string config_snapshot(const RunConfig& config) {
  RunConfig c = config;
  std::string out;
  std::string current;
  for (const auto& f : config_fields(c)) {
    if (f.section != "run" && f.section != "physics" && f.section != c.algorithm) continue;
    if (f.section != current) {
      if (!current.empty()) out += "\n";
      out += "[" + f.section + "]\n";
      current = f.section;
    }
    out += f.key + " = " + detail::format_value(f.ref) + "\n";
  }
  return out;
}

inline nlohmann::json config_json(const RunConfig& config) {
  nlohmann::json j = nlohmann::json::object();
  RunConfig c = config;
  for (const auto& f : config_fields(c)) {
    if (f.section != "run" && f.section != "physics" && f.section != c.algorithm) continue;
    j[f.section][f.key] = detail::format_value(f.ref);
  }
  return j;
}

inline RunConfig config_from_json(const nlohmann::json& j) {
  std::string text;
  for (const auto& [section, keys] : j.items()) {
    text += "[" + section + "]\n";
    for (const auto& [key, value] : keys.items()) text += key + " = " + value.get<std::string>() + "\n";
  }
  return parse_config_text(text);
}

// Line-walker action width: one joint for ARS, four for the DQN codec (and
// the scripted baselines, which always drive four joints).
inline EnvFactory make_env_factory(const std::string& environment, const walker::PhysicsConfig& physics,
                                   std::size_t line_walker_actions) {
  if (environment == "walker") {
    physics.validate();
    return [physics] { return std::make_unique<walker::WalkerEnv>(physics); };
  }
  if (environment == "line-walker") {
    return [line_walker_actions] { return std::make_unique<LineWalker>(line_walker_actions); };
  }
  if (environment == "quadratic-regulator") return [] { return std::make_unique<QuadraticRegulator>(); };
  throw ConstraintError("unknown environment '" + environment + "'");
}

inline EnvFactory make_env_factory(const RunConfig& c) {
  return make_env_factory(c.environment, c.physics, c.algorithm == "dqn" ? 4 : 1);
}

}  // namespace walkrl::cli
