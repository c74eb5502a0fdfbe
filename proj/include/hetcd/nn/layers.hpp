#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "hetcd/nn/tensor.hpp"
#include "hetcd/rng.hpp"

namespace hetcd::nn {

enum class Activation { leaky_relu, tanh, sigmoid, linear };

constexpr double kLeakySlope = 0.3;

template <typename T>
inline T activate(Activation a, T x) {
  switch (a) {
    case Activation::leaky_relu: return x > T(0) ? x : T(kLeakySlope) * x;
    case Activation::tanh: return std::tanh(x);
    case Activation::sigmoid: return T(1) / (T(1) + std::exp(-x));
    case Activation::linear: return x;
  }
  return x;
}

// Derivative expressed through the post-activation value. For leaky ReLU the
// kink at 0 is assigned the negative-side slope.
template <typename T>
inline T activation_grad_from_output(Activation a, T y) {
  switch (a) {
    case Activation::leaky_relu: return y > T(0) ? T(1) : T(kLeakySlope);
    case Activation::tanh: return T(1) - y * y;
    case Activation::sigmoid: return y * (T(1) - y);
    case Activation::linear: return T(1);
  }
  return T(1);
}

// 3x3 convolution, stride 1, zero padding 1: output spatial dims equal the
// input's. Weight layout is [ky][kx][c_in][c_out] so the innermost c_out
// loop runs over contiguous memory.
template <typename T>
struct ConvLayer {
  int in_channels = 0;
  int out_channels = 0;
  Activation act = Activation::linear;
  std::vector<T> weights;  // 3*3*in_channels*out_channels
  std::vector<T> biases;   // out_channels

  ConvLayer() = default;
  ConvLayer(int cin, int cout, Activation a)
      : in_channels(cin),
        out_channels(cout),
        act(a),
        weights(static_cast<std::size_t>(9) * cin * cout, T(0)),
        biases(cout, T(0)) {}

  std::size_t weight_index(int ky, int kx, int ci, int co) const {
    return ((static_cast<std::size_t>(ky) * 3 + kx) * in_channels + ci) * out_channels + co;
  }
  std::size_t parameter_count() const { return weights.size() + biases.size(); }
};

template <typename T>
struct ConvGrads {
  std::vector<T> weights;
  std::vector<T> biases;

  void resize_like(const ConvLayer<T>& layer) {
    weights.assign(layer.weights.size(), T(0));
    biases.assign(layer.biases.size(), T(0));
  }
};

template <typename T>
Tensor<T> conv_forward(const Tensor<T>& input, const ConvLayer<T>& layer) {
  if (input.c != layer.in_channels) throw ShapeError("conv_forward: channel mismatch");
  const int h = input.h, w = input.w;
  const int cin = layer.in_channels, cout = layer.out_channels;
  Tensor<T> out(h, w, cout);
  std::vector<T> acc(cout);
  for (int y = 0; y < h; ++y) {
    const int ky_lo = y == 0 ? 1 : 0;
    const int ky_hi = y == h - 1 ? 1 : 2;
    for (int x = 0; x < w; ++x) {
      const int kx_lo = x == 0 ? 1 : 0;
      const int kx_hi = x == w - 1 ? 1 : 2;
      std::copy(layer.biases.begin(), layer.biases.end(), acc.begin());
      for (int ky = ky_lo; ky <= ky_hi; ++ky) {
        const int yy = y + ky - 1;
        for (int kx = kx_lo; kx <= kx_hi; ++kx) {
          const int xx = x + kx - 1;
          const T* in_px = &input.v[input.index(yy, xx, 0)];
          const T* wbase = &layer.weights[layer.weight_index(ky, kx, 0, 0)];
          for (int ci = 0; ci < cin; ++ci) {
            const T v = in_px[ci];
            const T* wrow = wbase + static_cast<std::size_t>(ci) * cout;
            T* a = acc.data();
            for (int co = 0; co < cout; ++co) a[co] += v * wrow[co];
          }
        }
      }
      T* out_px = &out.v[out.index(y, x, 0)];
      for (int co = 0; co < cout; ++co) out_px[co] = activate(layer.act, acc[co]);
    }
  }
  return out;
}

// Exact gradients of conv_forward. `output` must be the cached forward
// result for `input`; `input_grad` is overwritten, parameter gradients are
// accumulated into `grads`.
template <typename T>
void conv_backward(const Tensor<T>& upstream, const Tensor<T>& input, const Tensor<T>& output,
                   const ConvLayer<T>& layer, Tensor<T>& input_grad, ConvGrads<T>& grads) {
  if (!upstream.same_shape(output)) throw ShapeError("conv_backward: upstream/output shape mismatch");
  if (grads.weights.size() != layer.weights.size()) throw ShapeError("conv_backward: grad buffer mismatch");
  const int h = input.h, w = input.w;
  const int cin = layer.in_channels, cout = layer.out_channels;
  input_grad = zeros_like(input);
  std::vector<T> dpre(cout);
  for (int y = 0; y < h; ++y) {
    const int ky_lo = y == 0 ? 1 : 0;
    const int ky_hi = y == h - 1 ? 1 : 2;
    for (int x = 0; x < w; ++x) {
      const int kx_lo = x == 0 ? 1 : 0;
      const int kx_hi = x == w - 1 ? 1 : 2;
      const T* up_px = &upstream.v[upstream.index(y, x, 0)];
      const T* out_px = &output.v[output.index(y, x, 0)];
      for (int co = 0; co < cout; ++co) {
        dpre[co] = up_px[co] * activation_grad_from_output(layer.act, out_px[co]);
      }
      for (int co = 0; co < cout; ++co) grads.biases[co] += dpre[co];
      for (int ky = ky_lo; ky <= ky_hi; ++ky) {
        const int yy = y + ky - 1;
        for (int kx = kx_lo; kx <= kx_hi; ++kx) {
          const int xx = x + kx - 1;
          const T* in_px = &input.v[input.index(yy, xx, 0)];
          T* gin_px = &input_grad.v[input_grad.index(yy, xx, 0)];
          const T* wbase = &layer.weights[layer.weight_index(ky, kx, 0, 0)];
          T* gwbase = &grads.weights[layer.weight_index(ky, kx, 0, 0)];
          for (int ci = 0; ci < cin; ++ci) {
            const T v = in_px[ci];
            const T* wrow = wbase + static_cast<std::size_t>(ci) * cout;
            T* gwrow = gwbase + static_cast<std::size_t>(ci) * cout;
            T acc = T(0);
            for (int co = 0; co < cout; ++co) {
              gwrow[co] += v * dpre[co];
              acc += wrow[co] * dpre[co];
            }
            gin_px[ci] += acc;
          }
        }
      }
    }
  }
}

// Inverted dropout: survivors are scaled by 1/(1-rate) at training time so
// inference is the identity.
template <typename T>
struct DropoutMask {
  std::vector<uint8_t> keep;
  T scale = T(1);
};

template <typename T>
Tensor<T> dropout_forward(const Tensor<T>& input, double rate, bool training, Rng& rng,
                          DropoutMask<T>& mask) {
  if (rate < 0.0 || rate >= 1.0) throw ConfigError("dropout rate must be in [0, 1)");
  if (!training || rate == 0.0) {
    mask.keep.clear();
    mask.scale = T(1);
    return input;
  }
  mask.keep.resize(input.size());
  mask.scale = T(1.0 / (1.0 - rate));
  Tensor<T> out(input.h, input.w, input.c);
  for (std::size_t i = 0; i < input.size(); ++i) {
    bool keep = !rng.bernoulli(rate);
    mask.keep[i] = keep;
    out.v[i] = keep ? input.v[i] * mask.scale : T(0);
  }
  return out;
}

template <typename T>
Tensor<T> dropout_backward(const Tensor<T>& upstream, const DropoutMask<T>& mask) {
  if (mask.keep.empty()) return upstream;
  Tensor<T> out(upstream.h, upstream.w, upstream.c);
  for (std::size_t i = 0; i < upstream.size(); ++i) {
    out.v[i] = mask.keep[i] ? upstream.v[i] * mask.scale : T(0);
  }
  return out;
}

// Fully connected map to a single neuron. Only used as the discriminator
// head, after global average pooling over the spatial dims.
template <typename T>
struct DenseLayer {
  Activation act = Activation::sigmoid;
  std::vector<T> weights;
  T bias = T(0);

  DenseLayer() = default;
  DenseLayer(int n_in, Activation a) : act(a), weights(n_in, T(0)) {}
  std::size_t parameter_count() const { return weights.size() + 1; }
};

template <typename T>
struct DenseGrads {
  std::vector<T> weights;
  T bias = T(0);

  void resize_like(const DenseLayer<T>& layer) {
    weights.assign(layer.weights.size(), T(0));
    bias = T(0);
  }
};

template <typename T>
T dense_forward(const std::vector<T>& input, const DenseLayer<T>& layer) {
  if (input.size() != layer.weights.size()) throw ShapeError("dense_forward: dimension mismatch");
  T acc = layer.bias;
  for (std::size_t i = 0; i < input.size(); ++i) acc += layer.weights[i] * input[i];
  return activate(layer.act, acc);
}

template <typename T>
void dense_backward(T upstream, const std::vector<T>& input, T output, const DenseLayer<T>& layer,
                    std::vector<T>& input_grad, DenseGrads<T>& grads) {
  T dpre = upstream * activation_grad_from_output(layer.act, output);
  grads.bias += dpre;
  input_grad.assign(input.size(), T(0));
  for (std::size_t i = 0; i < input.size(); ++i) {
    grads.weights[i] += dpre * input[i];
    input_grad[i] = layer.weights[i] * dpre;
  }
}

}  // namespace hetcd::nn
