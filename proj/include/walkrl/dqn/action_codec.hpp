#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "walkrl/errors.hpp"

namespace walkrl::dqn {

// Maps a flat index to one level per joint, most significant digit first.
class ActionCodec {
 public:
  explicit ActionCodec(std::vector<double> levels = {-1.0, 0.0, 1.0}, std::size_t joints = 4)
      : levels_(std::move(levels)), joints_(joints) {
    if (levels_.size() < 2) throw ConfigError("ActionCodec: need at least two levels");
    if (joints_ < 1) throw ConfigError("ActionCodec: need at least one joint");
    size_ = 1;
    for (std::size_t j = 0; j < joints_; ++j) size_ *= levels_.size();
  }

  std::size_t size() const { return size_; }
  std::size_t joints() const { return joints_; }
  const std::vector<double>& levels() const { return levels_; }

  std::vector<double> decode(std::size_t index) const {
    if (index >= size_) {
      throw DimensionError("decode_action: index " + std::to_string(index) + " out of range [0, " +
                           std::to_string(size_) + ")");
    }
    std::vector<double> a(joints_);
    for (std::size_t j = joints_; j-- > 0;) {
      a[j] = levels_[index % levels_.size()];
      index /= levels_.size();
    }
    return a;
  }

  std::size_t encode(std::span<const double> a) const {
    if (a.size() != joints_) throw DimensionError("encode_action: wrong number of joints");
    std::size_t index = 0;
    for (double x : a) {
      std::size_t digit = levels_.size();
      for (std::size_t k = 0; k < levels_.size(); ++k) {
        if (levels_[k] == x) digit = k;
      }
      if (digit == levels_.size()) throw DimensionError("encode_action: coordinate is not on the level grid");
      index = index * levels_.size() + digit;
    }
    return index;
  }

 private:
  std::vector<double> levels_;
  std::size_t joints_;
  std::size_t size_ = 0;
};

inline std::vector<double> decode_action(std::size_t index) { return ActionCodec{}.decode(index); }
inline std::size_t encode_action(std::span<const double> a) { return ActionCodec{}.encode(a); }

}  // namespace walkrl::dqn
