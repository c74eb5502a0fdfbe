#pragma once

#include "hetcd/nn/tensor.hpp"
#include "hetcd/raster.hpp"

namespace hetcd {

// Band-sequential raster to channel-interleaved tensor and back.
inline nn::Tensor<float> tensor_from_raster(const Raster& r) {
  nn::Tensor<float> t(r.height, r.width, r.channels);
  for (int c = 0; c < r.channels; ++c)
    for (int y = 0; y < r.height; ++y)
      for (int x = 0; x < r.width; ++x) t.at(y, x, c) = r.at(y, x, c);
  return t;
}

inline Raster raster_from_tensor(const nn::Tensor<float>& t) {
  Raster r(t.h, t.w, t.c);
  for (int c = 0; c < t.c; ++c)
    for (int y = 0; y < t.h; ++y)
      for (int x = 0; x < t.w; ++x) r.at(y, x, c) = t.at(y, x, c);
  return r;
}

}  // namespace hetcd
