#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "hetcd/error.hpp"

namespace hetcd::nn {

struct AdamConfig {
  double lr = 1e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// First/second moment slots for one parameter block, plus the shared step
// counter kept by the owner. Classic Adam with bias correction.
template <typename T>
struct AdamState {
  std::vector<T> m;
  std::vector<T> v;

  void resize(std::size_t n) {
    m.assign(n, T(0));
    v.assign(n, T(0));
  }
};

template <typename T>
void adam_step(T* params, const T* grads, std::size_t n, AdamState<T>& state, int64_t step,
               const AdamConfig& cfg) {
  if (state.m.size() != n) throw ShapeError("adam_step: state size mismatch");
  const double b1 = cfg.beta1, b2 = cfg.beta2;
  const double corr1 = 1.0 - std::pow(b1, static_cast<double>(step));
  const double corr2 = 1.0 - std::pow(b2, static_cast<double>(step));
  for (std::size_t i = 0; i < n; ++i) {
    double g = static_cast<double>(grads[i]);
    double m = b1 * static_cast<double>(state.m[i]) + (1.0 - b1) * g;
    double v = b2 * static_cast<double>(state.v[i]) + (1.0 - b2) * g * g;
    state.m[i] = static_cast<T>(m);
    state.v[i] = static_cast<T>(v);
    double mhat = m / corr1;
    double vhat = v / corr2;
    params[i] -= static_cast<T>(cfg.lr * mhat / (std::sqrt(vhat) + cfg.epsilon));
  }
}

}  // namespace hetcd::nn
