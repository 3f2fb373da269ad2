#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "walkrl/errors.hpp"

namespace walkrl {

// Floor applied to every standard deviation that ends up as a divisor.
inline constexpr double kStdFloor = 1e-8;

// Per-dimension online mean/variance (Welford), population convention.
class RunningStats {
 public:
  RunningStats() = default;
  explicit RunningStats(std::size_t dim) : mean_(dim, 0.0), m2_(dim, 0.0) {}
  RunningStats(std::size_t count, std::vector<double> mean, std::vector<double> m2)
      : count_(count), mean_(std::move(mean)), m2_(std::move(m2)) {
    if (mean_.size() != m2_.size()) throw DimensionError("RunningStats: mean/m2 length mismatch");
  }

  std::size_t count() const { return count_; }
  std::size_t dim() const { return mean_.size(); }
  const std::vector<double>& mean() const { return mean_; }
  const std::vector<double>& m2() const { return m2_; }

  void update(std::span<const double> x) {
    if (mean_.empty() && count_ == 0) {
      mean_.assign(x.size(), 0.0);
      m2_.assign(x.size(), 0.0);
    }
    check_dim(x.size());
    ++count_;
    const double n = static_cast<double>(count_);
    for (std::size_t j = 0; j < x.size(); ++j) {
      const double delta = x[j] - mean_[j];
      mean_[j] += delta / n;
      m2_[j] += delta * (x[j] - mean_[j]);
    }
  }

  // Chan et al. pairwise combination; equivalent to replaying other's samples.
  void merge(const RunningStats& other) {
    if (other.count_ == 0) return;
    if (count_ == 0) {
      *this = other;
      return;
    }
    check_dim(other.dim());
    const double na = static_cast<double>(count_);
    const double nb = static_cast<double>(other.count_);
    const double n = na + nb;
    for (std::size_t j = 0; j < mean_.size(); ++j) {
      const double delta = other.mean_[j] - mean_[j];
      mean_[j] += delta * nb / n;
      m2_[j] += other.m2_[j] + delta * delta * na * nb / n;
    }
    count_ += other.count_;
  }

  double variance(std::size_t j) const {
    return count_ > 0 ? m2_[j] / static_cast<double>(count_) : 0.0;
  }
  double stddev(std::size_t j) const { return std::sqrt(variance(j)); }

  // (x - mean) / max(std, floor); identity until two samples have been seen.
  std::vector<double> normalize(std::span<const double> x) const {
    std::vector<double> out(x.begin(), x.end());
    if (count_ < 2) return out;
    check_dim(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) {
      out[j] = (x[j] - mean_[j]) / std::max(stddev(j), kStdFloor);
    }
    return out;
  }

 private:
  void check_dim(std::size_t n) const {
    if (n != mean_.size()) {
      throw DimensionError("RunningStats: expected dimension " + std::to_string(mean_.size()) +
                           ", got " + std::to_string(n));
    }
  }

  std::size_t count_ = 0;
  std::vector<double> mean_;
  std::vector<double> m2_;
};

// Population standard deviation, floored at kStdFloor.
inline double std_of(std::span<const double> values) {
  if (values.empty()) throw DimensionError("std_of: empty input");
  // sorted so the result does not depend on input order
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  double mean = 0.0;
  for (double v : sorted) mean += v;
  mean /= static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : sorted) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(values.size()));
  return std::max(sd, kStdFloor);
}

}  // namespace walkrl
