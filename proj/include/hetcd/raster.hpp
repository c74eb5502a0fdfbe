#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace hetcd {

// Multi-channel float image. Storage is band-sequential: all of channel 0
// in row-major order, then channel 1, and so on — matching the on-disk
// layout of the native format. Immutable by convention after construction;
// operations below return new rasters.
struct Raster {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<float> data;  // height * width * channels, band-sequential

  Raster() = default;
  Raster(int h, int w, int c, float fill = 0.0f)
      : height(h), width(w), channels(c), data(static_cast<size_t>(h) * w * c, fill) {}

  std::size_t band_size() const { return static_cast<std::size_t>(height) * width; }
  std::size_t size() const { return band_size() * channels; }

  float& at(int y, int x, int c) { return data[static_cast<std::size_t>(c) * band_size() + static_cast<std::size_t>(y) * width + x]; }
  float at(int y, int x, int c) const { return data[static_cast<std::size_t>(c) * band_size() + static_cast<std::size_t>(y) * width + x]; }

  bool same_shape(const Raster& o) const {
    return height == o.height && width == o.width && channels == o.channels;
  }
};

// Raster scaled per channel into [-1, 1], keeping the affine map so the
// original values can be recovered. Channels that were constant are mapped
// to all-zeros and flagged instead of dividing by zero.
struct NormalizedRaster {
  Raster raster;
  std::vector<float> channel_min;
  std::vector<float> channel_max;
  std::vector<uint8_t> constant_channel;

  bool has_constant_channel() const {
    for (uint8_t f : constant_channel)
      if (f) return true;
    return false;
  }
};

// Native "HCDR" container, little-endian float32. Load also accepts 8-bit
// grayscale/RGB PNG, mapped to [0, 1]. Errors carry the byte offset of the
// offending field or sample.
Raster load_raster(const std::string& path);
void save_raster(const Raster& r, const std::string& path);

NormalizedRaster normalize(const Raster& r);
Raster denormalize(const NormalizedRaster& n);

// Per-channel mean over 2x2 blocks; odd trailing rows/columns average the
// clamped 1x2 / 2x1 / 1x1 block, so output dims are ceil(n/2).
Raster downsample2(const Raster& r);

// Corner-aligned bilinear interpolation up to (target_h, target_w).
Raster upsample_bilinear(const Raster& r, int target_h, int target_w);

}  // namespace hetcd
