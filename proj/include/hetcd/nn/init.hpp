#pragma once

#include <cmath>

#include "hetcd/nn/layers.hpp"
#include "hetcd/rng.hpp"

namespace hetcd::nn {

// Weights drawn from N(0, 2/(fan_in + fan_out)) truncated at two standard
// deviations; biases stay zero. For a 3x3 kernel the fans include the
// receptive-field size.
template <typename T>
void glorot_truncated_init(ConvLayer<T>& layer, Rng& rng) {
  double fan_in = 9.0 * layer.in_channels;
  double fan_out = 9.0 * layer.out_channels;
  double stddev = std::sqrt(2.0 / (fan_in + fan_out));
  for (T& w : layer.weights) w = static_cast<T>(rng.truncated_normal(stddev));
  for (T& b : layer.biases) b = T(0);
}

template <typename T>
void glorot_truncated_init(DenseLayer<T>& layer, Rng& rng) {
  double fan_in = static_cast<double>(layer.weights.size());
  double stddev = std::sqrt(2.0 / (fan_in + 1.0));
  for (T& w : layer.weights) w = static_cast<T>(rng.truncated_normal(stddev));
  layer.bias = T(0);
}

}  // namespace hetcd::nn
