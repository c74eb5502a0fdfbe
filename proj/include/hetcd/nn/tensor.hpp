#pragma once

#include <cstddef>
#include <vector>

#include "hetcd/error.hpp"

namespace hetcd::nn {

// Dense h*w*c tensor with interleaved channels (channel-last). This layout
// keeps the output-channel loop of the convolutions contiguous, which is
// what the compiler needs to vectorize them.
template <typename T>
struct Tensor {
  int h = 0, w = 0, c = 0;
  std::vector<T> v;

  Tensor() = default;
  Tensor(int h_, int w_, int c_, T fill = T(0))
      : h(h_), w(w_), c(c_), v(static_cast<std::size_t>(h_) * w_ * c_, fill) {}

  std::size_t size() const { return v.size(); }
  std::size_t index(int y, int x, int ch) const {
    return (static_cast<std::size_t>(y) * w + x) * c + ch;
  }
  T& at(int y, int x, int ch) { return v[index(y, x, ch)]; }
  T at(int y, int x, int ch) const { return v[index(y, x, ch)]; }

  bool same_shape(const Tensor& o) const { return h == o.h && w == o.w && c == o.c; }

  void require_shape(int h_, int w_, int c_, const char* what) const {
    if (h != h_ || w != w_ || c != c_) throw ShapeError(std::string(what) + ": tensor shape mismatch");
  }
};

template <typename T>
Tensor<T> zeros_like(const Tensor<T>& t) {
  return Tensor<T>(t.h, t.w, t.c);
}

}  // namespace hetcd::nn
