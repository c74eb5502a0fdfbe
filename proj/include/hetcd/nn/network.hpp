#pragma once

#include <vector>

#include "hetcd/nn/adam.hpp"
#include "hetcd/nn/layers.hpp"

namespace hetcd::nn {

// Plain stack of 3x3 conv layers. Dropout is applied to hidden activations
// at training time; the final layer output is left untouched.
template <typename T>
struct ConvNet {
  std::vector<ConvLayer<T>> layers;

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.parameter_count();
    return n;
  }
  int out_channels() const { return layers.empty() ? 0 : layers.back().out_channels; }
  int in_channels() const { return layers.empty() ? 0 : layers.front().in_channels; }
};

template <typename T>
struct ConvNetCache {
  std::vector<Tensor<T>> inputs;   // conv input per layer, after any dropout
  std::vector<Tensor<T>> outputs;  // post-activation output per layer
  std::vector<DropoutMask<T>> masks;
};

template <typename T>
struct ConvNetGrads {
  std::vector<ConvGrads<T>> layers;

  void resize_like(const ConvNet<T>& net) {
    layers.resize(net.layers.size());
    for (std::size_t i = 0; i < layers.size(); ++i) layers[i].resize_like(net.layers[i]);
  }
  void clear() {
    for (auto& g : layers) {
      std::fill(g.weights.begin(), g.weights.end(), T(0));
      std::fill(g.biases.begin(), g.biases.end(), T(0));
    }
  }
};

template <typename T>
Tensor<T> convnet_forward(const ConvNet<T>& net, const Tensor<T>& input, bool training,
                          double dropout_rate, Rng& rng, ConvNetCache<T>& cache) {
  cache.inputs.clear();
  cache.outputs.clear();
  cache.masks.assign(net.layers.size(), DropoutMask<T>{});
  Tensor<T> x = input;
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    cache.inputs.push_back(x);
    Tensor<T> y = conv_forward(x, net.layers[i]);
    cache.outputs.push_back(y);
    bool hidden = i + 1 < net.layers.size();
    if (hidden) {
      x = dropout_forward(y, dropout_rate, training, rng, cache.masks[i]);
    } else {
      x = std::move(y);
    }
  }
  return x;
}

template <typename T>
Tensor<T> convnet_infer(const ConvNet<T>& net, const Tensor<T>& input) {
  ConvNetCache<T> cache;
  Rng rng(0);
  return convnet_forward(net, input, /*training=*/false, 0.0, rng, cache);
}

// Propagates `upstream` back through the cached forward pass, accumulating
// parameter gradients, and returns the gradient at the network input.
template <typename T>
Tensor<T> convnet_backward(const ConvNet<T>& net, const ConvNetCache<T>& cache,
                           const Tensor<T>& upstream, ConvNetGrads<T>& grads) {
  Tensor<T> d = upstream;
  for (std::size_t ri = net.layers.size(); ri-- > 0;) {
    bool hidden = ri + 1 < net.layers.size();
    if (hidden) d = dropout_backward(d, cache.masks[ri]);
    Tensor<T> d_input;
    conv_backward(d, cache.inputs[ri], cache.outputs[ri], net.layers[ri], d_input, grads.layers[ri]);
    d = std::move(d_input);
  }
  return d;
}

// Discriminator: conv stack, global average pooling over the spatial dims,
// then a single-neuron dense head. Pooling keeps the head independent of
// the input size, so whole images and patches both work.
template <typename T>
struct Discriminator {
  ConvNet<T> convs;
  DenseLayer<T> head;

  std::size_t parameter_count() const { return convs.parameter_count() + head.parameter_count(); }
};

template <typename T>
struct DiscriminatorCache {
  ConvNetCache<T> convs;
  Tensor<T> features;
  std::vector<T> pooled;
  T output = T(0);
};

template <typename T>
struct DiscriminatorGrads {
  ConvNetGrads<T> convs;
  DenseGrads<T> head;

  void resize_like(const Discriminator<T>& d) {
    convs.resize_like(d.convs);
    head.resize_like(d.head);
  }
  void clear() {
    convs.clear();
    std::fill(head.weights.begin(), head.weights.end(), T(0));
    head.bias = T(0);
  }
};

template <typename T>
T discriminator_forward(const Discriminator<T>& d, const Tensor<T>& input, bool training,
                        double dropout_rate, Rng& rng, DiscriminatorCache<T>& cache) {
  cache.features = convnet_forward(d.convs, input, training, dropout_rate, rng, cache.convs);
  const Tensor<T>& f = cache.features;
  cache.pooled.assign(f.c, T(0));
  for (int y = 0; y < f.h; ++y)
    for (int x = 0; x < f.w; ++x)
      for (int ch = 0; ch < f.c; ++ch) cache.pooled[ch] += f.at(y, x, ch);
  T inv = T(1) / static_cast<T>(f.h * f.w);
  for (T& p : cache.pooled) p *= inv;
  cache.output = dense_forward(cache.pooled, d.head);
  return cache.output;
}

template <typename T>
Tensor<T> discriminator_backward(const Discriminator<T>& d, const DiscriminatorCache<T>& cache,
                                 T upstream, DiscriminatorGrads<T>& grads) {
  std::vector<T> d_pooled;
  dense_backward(upstream, cache.pooled, cache.output, d.head, d_pooled, grads.head);
  const Tensor<T>& f = cache.features;
  Tensor<T> d_features(f.h, f.w, f.c);
  T inv = T(1) / static_cast<T>(f.h * f.w);
  for (int y = 0; y < f.h; ++y)
    for (int x = 0; x < f.w; ++x)
      for (int ch = 0; ch < f.c; ++ch) d_features.at(y, x, ch) = d_pooled[ch] * inv;
  return convnet_backward(d.convs, cache.convs, d_features, grads.convs);
}

// Flat views over parameter or gradient blocks, in declaration order. The
// order is the contract for the optimizer states and the checkpoint format.
template <typename T>
struct ParamBlock {
  T* data = nullptr;
  std::size_t n = 0;
  bool is_weight = false;  // weight decay applies to weights only, never biases
};

template <typename T>
void collect_blocks(ConvNet<T>& net, std::vector<ParamBlock<T>>& out) {
  for (auto& l : net.layers) {
    out.push_back({l.weights.data(), l.weights.size(), true});
    out.push_back({l.biases.data(), l.biases.size(), false});
  }
}

template <typename T>
void collect_blocks(ConvNetGrads<T>& grads, std::vector<ParamBlock<T>>& out) {
  for (auto& g : grads.layers) {
    out.push_back({g.weights.data(), g.weights.size(), true});
    out.push_back({g.biases.data(), g.biases.size(), false});
  }
}

template <typename T>
void collect_blocks(Discriminator<T>& d, std::vector<ParamBlock<T>>& out) {
  collect_blocks(d.convs, out);
  out.push_back({d.head.weights.data(), d.head.weights.size(), true});
  out.push_back({&d.head.bias, 1, false});
}

template <typename T>
void collect_blocks(DiscriminatorGrads<T>& g, std::vector<ParamBlock<T>>& out) {
  collect_blocks(g.convs, out);
  out.push_back({g.head.weights.data(), g.head.weights.size(), true});
  out.push_back({&g.head.bias, 1, false});
}

// Squared L2 norm of the weight blocks (biases excluded).
template <typename T>
double weight_squared_norm(const std::vector<ParamBlock<T>>& blocks) {
  double acc = 0.0;
  for (const auto& b : blocks) {
    if (!b.is_weight) continue;
    for (std::size_t i = 0; i < b.n; ++i) acc += static_cast<double>(b.data[i]) * b.data[i];
  }
  return acc;
}

// d/dθ of w * ||θ||^2 accumulated onto the gradient blocks.
template <typename T>
void add_weight_decay_grad(const std::vector<ParamBlock<T>>& params,
                           std::vector<ParamBlock<T>>& grads, double w) {
  for (std::size_t b = 0; b < params.size(); ++b) {
    if (!params[b].is_weight) continue;
    for (std::size_t i = 0; i < params[b].n; ++i) {
      grads[b].data[i] += static_cast<T>(2.0 * w * params[b].data[i]);
    }
  }
}

// Adam over an ordered block list; one shared step counter.
template <typename T>
struct AdamOptimizer {
  AdamConfig cfg;
  std::vector<AdamState<T>> states;
  int64_t step = 0;

  void init(const std::vector<ParamBlock<T>>& blocks) {
    states.resize(blocks.size());
    for (std::size_t i = 0; i < blocks.size(); ++i) states[i].resize(blocks[i].n);
  }

  void apply(std::vector<ParamBlock<T>>& params, const std::vector<ParamBlock<T>>& grads) {
    if (params.size() != states.size() || grads.size() != states.size()) {
      throw ShapeError("AdamOptimizer: block count mismatch");
    }
    ++step;
    for (std::size_t i = 0; i < params.size(); ++i) {
      adam_step(params[i].data, grads[i].data, params[i].n, states[i], step, cfg);
    }
  }
};

}  // namespace hetcd::nn
