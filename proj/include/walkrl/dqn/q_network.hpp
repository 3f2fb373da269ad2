#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "walkrl/errors.hpp"
#include "walkrl/numerics/matrix.hpp"
#include "walkrl/numerics/rng.hpp"

namespace walkrl::dqn {

struct DenseLayer {
  Matrix weights;  // out x in
  std::vector<double> bias;

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

// Three dense layers, tanh on the two hidden ones, linear output.
struct QNetwork {
  std::array<DenseLayer, 3> layers;

  std::size_t inputs() const { return layers[0].weights.cols(); }
  std::size_t outputs() const { return layers[2].weights.rows(); }

  bool all_finite() const {
    for (const auto& l : layers) {
      if (!l.weights.all_finite()) return false;
      for (double b : l.bias) {
        if (!std::isfinite(b)) return false;
      }
    }
    return true;
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.weights.size() + l.bias.size();
    return n;
  }

  friend bool operator==(const QNetwork&, const QNetwork&) = default;
};

inline constexpr std::uint64_t kInitTag = 0x1417;

// Uniform in +-1/sqrt(fan_in), biases included.
inline QNetwork make_network(std::size_t inputs, std::size_t hidden1, std::size_t hidden2, std::size_t outputs,
                             std::uint64_t seed) {
  const std::array<std::size_t, 4> sizes = {inputs, hidden1, hidden2, outputs};
  QNetwork net;
  for (std::size_t k = 0; k < 3; ++k) {
    RngStream rng(seed, derive_stream(kInitTag, k));
    const double bound = 1.0 / std::sqrt(static_cast<double>(sizes[k]));
    auto& l = net.layers[k];
    l.weights = Matrix(sizes[k + 1], sizes[k]);
    for (double& w : l.weights.values()) w = rng.uniform(-bound, bound);
    l.bias.resize(sizes[k + 1]);
    for (double& b : l.bias) b = rng.uniform(-bound, bound);
  }
  return net;
}

inline QNetwork make_walker_network(std::uint64_t seed) { return make_network(24, 55, 55, 81, seed); }

// Activations kept for backprop.
struct ForwardTrace {
  std::vector<double> input;
  std::vector<double> h1;
  std::vector<double> h2;
  std::vector<double> out;
};

inline std::vector<double> dense(const DenseLayer& l, std::span<const double> x) {
  auto y = matvec(l.weights, x);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += l.bias[i];
  return y;
}

inline ForwardTrace q_trace(const QNetwork& net, std::span<const double> obs) {
  ForwardTrace t;
  t.input.assign(obs.begin(), obs.end());
  t.h1 = dense(net.layers[0], obs);
  for (double& v : t.h1) v = std::tanh(v);
  t.h2 = dense(net.layers[1], t.h1);
  for (double& v : t.h2) v = std::tanh(v);
  t.out = dense(net.layers[2], t.h2);
  return t;
}

inline std::vector<double> q_forward(const QNetwork& net, std::span<const double> obs) {
  if (obs.size() != net.inputs()) {
    throw DimensionError("q_forward: observation has " + std::to_string(obs.size()) + " entries, network expects " +
                         std::to_string(net.inputs()));
  }
  return q_trace(net, obs).out;
}

// Gradient of (target - Q(s, a))^2 / 2 with respect to every parameter.
inline QNetwork q_gradient(const QNetwork& net, std::span<const double> obs, std::size_t action, double target) {
  if (action >= net.outputs()) throw DimensionError("q_gradient: action index out of range");
  const auto t = q_trace(net, obs);
  QNetwork g;
  for (std::size_t k = 0; k < 3; ++k) {
    g.layers[k].weights = Matrix(net.layers[k].weights.rows(), net.layers[k].weights.cols());
    g.layers[k].bias.assign(net.layers[k].bias.size(), 0.0);
  }

  // Output layer: only the chosen action's unit carries error.
  const double err = t.out[action] - target;
  g.layers[2].bias[action] = err;
  for (std::size_t j = 0; j < t.h2.size(); ++j) g.layers[2].weights(action, j) = err * t.h2[j];

  std::vector<double> d2(t.h2.size());
  for (std::size_t j = 0; j < t.h2.size(); ++j) {
    d2[j] = err * net.layers[2].weights(action, j) * (1.0 - t.h2[j] * t.h2[j]);
  }
  for (std::size_t j = 0; j < d2.size(); ++j) {
    g.layers[1].bias[j] = d2[j];
    for (std::size_t i = 0; i < t.h1.size(); ++i) g.layers[1].weights(j, i) = d2[j] * t.h1[i];
  }

  std::vector<double> d1(t.h1.size(), 0.0);
  for (std::size_t j = 0; j < d2.size(); ++j) {
    const auto w = net.layers[1].weights.row(j);
    for (std::size_t i = 0; i < d1.size(); ++i) d1[i] += d2[j] * w[i];
  }
  for (std::size_t i = 0; i < d1.size(); ++i) d1[i] *= 1.0 - t.h1[i] * t.h1[i];
  for (std::size_t j = 0; j < d1.size(); ++j) {
    g.layers[0].bias[j] = d1[j];
    for (std::size_t i = 0; i < t.input.size(); ++i) g.layers[0].weights(j, i) = d1[j] * t.input[i];
  }
  return g;
}

// One SGD step on (target - Q(s, a))^2 / 2, in place. Same arithmetic as
// q_gradient but without materializing the mostly-zero output gradient.
inline void q_gradient_step(QNetwork& net, std::span<const double> obs, std::size_t action, double target,
                            double alpha) {
  if (!std::isfinite(target)) throw DivergenceError("q_gradient_step: non-finite target");
  if (action >= net.outputs()) throw DimensionError("q_gradient_step: action index out of range");
  const auto t = q_trace(net, obs);
  const double err = t.out[action] - target;
  if (!std::isfinite(err)) throw DivergenceError("q_gradient_step: non-finite gradient");

  std::vector<double> d2(t.h2.size());
  for (std::size_t j = 0; j < t.h2.size(); ++j) {
    d2[j] = err * net.layers[2].weights(action, j) * (1.0 - t.h2[j] * t.h2[j]);
  }
  std::vector<double> d1(t.h1.size(), 0.0);
  for (std::size_t j = 0; j < d2.size(); ++j) {
    const auto w = net.layers[1].weights.row(j);
    for (std::size_t i = 0; i < d1.size(); ++i) d1[i] += d2[j] * w[i];
  }
  for (std::size_t i = 0; i < d1.size(); ++i) d1[i] *= 1.0 - t.h1[i] * t.h1[i];

  auto w3 = net.layers[2].weights.row(action);
  for (std::size_t j = 0; j < w3.size(); ++j) w3[j] -= alpha * err * t.h2[j];
  net.layers[2].bias[action] -= alpha * err;
  for (std::size_t j = 0; j < d2.size(); ++j) {
    auto w = net.layers[1].weights.row(j);
    for (std::size_t i = 0; i < w.size(); ++i) w[i] -= alpha * d2[j] * t.h1[i];
    net.layers[1].bias[j] -= alpha * d2[j];
  }
  for (std::size_t j = 0; j < d1.size(); ++j) {
    auto w = net.layers[0].weights.row(j);
    for (std::size_t i = 0; i < w.size(); ++i) w[i] -= alpha * d1[j] * t.input[i];
    net.layers[0].bias[j] -= alpha * d1[j];
  }
}

}  // namespace walkrl::dqn
