#pragma once

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <cerrno>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "walkrl/errors.hpp"

namespace walkrl::harness {

inline constexpr const char* kMetricsHeader = "episode,iteration_or_batch,reward,sigma,epsilon,wall_seconds,seed";

struct MetricsRow {
  std::size_t episode = 0;
  std::size_t iteration_or_batch = 0;
  double reward = 0.0;
  std::optional<double> sigma;    // ARS rows
  std::optional<double> epsilon;  // DQN rows
  double wall_seconds = 0.0;
  std::uint64_t seed = 0;

  friend bool operator==(const MetricsRow&, const MetricsRow&) = default;
};

// Shortest text that parses back to the same double.
inline std::string format_double(double x) {
  char buf[32];
  for (int precision = 1; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof buf, "%.*g", precision, x);
    if (std::strtod(buf, nullptr) == x) break;
  }
  return buf;
}

inline std::string format_metrics_row(const MetricsRow& r) {
  std::string line = std::to_string(r.episode) + "," + std::to_string(r.iteration_or_batch) + "," +
                     format_double(r.reward) + ",";
  if (r.sigma) line += format_double(*r.sigma);
  line += ",";
  if (r.epsilon) line += format_double(*r.epsilon);
  char wall[32];
  std::snprintf(wall, sizeof wall, "%.6f", r.wall_seconds);
  line += std::string(",") + wall + "," + std::to_string(r.seed);
  return line;
}

inline MetricsRow parse_metrics_row(const std::string& line) {
  std::vector<std::string> f;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) f.push_back(cell);
  if (!line.empty() && line.back() == ',') f.emplace_back();
  if (f.size() != 7) throw IoError("parse_metrics_row: expected 7 fields, got " + std::to_string(f.size()));
  try {
    MetricsRow r;
    r.episode = std::stoull(f[0]);
    r.iteration_or_batch = std::stoull(f[1]);
    r.reward = std::stod(f[2]);
    if (!f[3].empty()) r.sigma = std::stod(f[3]);
    if (!f[4].empty()) r.epsilon = std::stod(f[4]);
    r.wall_seconds = std::stod(f[5]);
    r.seed = std::stoull(f[6]);
    return r;
  } catch (const std::logic_error&) {
    throw IoError("parse_metrics_row: malformed field in '" + line + "'");
  }
}

// Append-only CSV with one writer at a time (advisory flock held while open).
// Every row goes straight to the kernel so an interrupted run keeps its data.
class MetricsLog {
 public:
  enum class Mode { append, fresh };

  // fresh: start the file over, but only once the lock is ours.
  explicit MetricsLog(const std::filesystem::path& path, Mode mode = Mode::append) : path_(path) {
    fd_ = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
    if (fd_ < 0) throw IoError("metrics log: cannot open " + path.string() + ": " + std::strerror(errno));
    if (::flock(fd_, LOCK_EX | LOCK_NB) != 0) {
      ::close(fd_);
      fd_ = -1;
      throw LockError("metrics log: " + path.string() + " is already being written by another run");
    }
    if (mode == Mode::fresh && ::ftruncate(fd_, 0) != 0) {
      const std::string why = std::strerror(errno);
      ::close(fd_);
      fd_ = -1;
      throw IoError("metrics log: cannot truncate " + path.string() + ": " + why);
    }
    if (::lseek(fd_, 0, SEEK_END) == 0) write_line(kMetricsHeader);
  }

  MetricsLog(const MetricsLog&) = delete;
  MetricsLog& operator=(const MetricsLog&) = delete;

  ~MetricsLog() {
    if (fd_ >= 0) {
      ::flock(fd_, LOCK_UN);
      ::close(fd_);
    }
  }

  void append(const MetricsRow& row) {
    if (!std::isfinite(row.reward)) throw IoError("metrics log: non-finite reward");
    if (last_episode_ && row.episode <= *last_episode_) {
      throw IoError("metrics log: episode indices must strictly increase");
    }
    write_line(format_metrics_row(row));
    last_episode_ = row.episode;
  }

  const std::filesystem::path& path() const { return path_; }

 private:
  void write_line(const std::string& text) {
    const std::string line = text + "\n";
    std::size_t done = 0;
    while (done < line.size()) {
      const ssize_t n = ::write(fd_, line.data() + done, line.size() - done);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw IoError("metrics log: write to " + path_.string() + " failed: " + std::strerror(errno));
      }
      done += static_cast<std::size_t>(n);
    }
  }

  std::filesystem::path path_;
  int fd_ = -1;
  std::optional<std::size_t> last_episode_;
};

// Convenience for one-off appends; takes and releases the lock per call.
inline void append_metrics(const std::filesystem::path& path, const MetricsRow& row) {
  MetricsLog log(path);
  log.append(row);
}

}  // namespace walkrl::harness
