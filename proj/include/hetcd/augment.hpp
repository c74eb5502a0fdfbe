#pragma once

#include "hetcd/nn/tensor.hpp"
#include "hetcd/rng.hpp"

namespace hetcd {

// Geometric patch augmentation: optional flips followed by a quarter-turn
// rotation. The same transform is applied to the two image patches and the
// weight patch of a training triple, so pixel alignment is preserved.
struct Geometry {
  bool hflip = false;
  bool vflip = false;
  int quarter_turns = 0;  // clockwise, 0..3
};

inline Geometry random_geometry(Rng& rng) {
  Geometry g;
  g.hflip = rng.bernoulli(0.5);
  g.vflip = rng.bernoulli(0.5);
  g.quarter_turns = static_cast<int>(rng.below(4));
  return g;
}

template <typename T>
nn::Tensor<T> extract_patch(const nn::Tensor<T>& img, int y0, int x0, int p) {
  nn::Tensor<T> out(p, p, img.c);
  for (int y = 0; y < p; ++y) {
    const T* src = &img.v[img.index(y0 + y, x0, 0)];
    T* dst = &out.v[out.index(y, 0, 0)];
    std::copy(src, src + static_cast<std::size_t>(p) * img.c, dst);
  }
  return out;
}

template <typename T>
nn::Tensor<T> apply_geometry(const nn::Tensor<T>& t, const Geometry& g) {
  nn::Tensor<T> cur = t;
  if (g.hflip) {
    nn::Tensor<T> next(cur.h, cur.w, cur.c);
    for (int y = 0; y < cur.h; ++y)
      for (int x = 0; x < cur.w; ++x)
        for (int c = 0; c < cur.c; ++c) next.at(y, x, c) = cur.at(y, cur.w - 1 - x, c);
    cur = std::move(next);
  }
  if (g.vflip) {
    nn::Tensor<T> next(cur.h, cur.w, cur.c);
    for (int y = 0; y < cur.h; ++y)
      for (int x = 0; x < cur.w; ++x)
        for (int c = 0; c < cur.c; ++c) next.at(y, x, c) = cur.at(cur.h - 1 - y, x, c);
    cur = std::move(next);
  }
  for (int r = 0; r < g.quarter_turns; ++r) {
    nn::Tensor<T> next(cur.w, cur.h, cur.c);
    for (int y = 0; y < next.h; ++y)
      for (int x = 0; x < next.w; ++x)
        for (int c = 0; c < cur.c; ++c) next.at(y, x, c) = cur.at(cur.h - 1 - x, y, c);
    cur = std::move(next);
  }
  return cur;
}

}  // namespace hetcd
