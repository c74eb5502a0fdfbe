#pragma once

#include <cstdint>
#include <vector>

#include "hetcd/raster.hpp"

namespace hetcd {

// Per-pixel change evidence. `combined` is the average of the two clipped,
// min-max scaled distance images; `filtered` additionally went through the
// spatial smoothing stage.
struct DifferenceImage {
  int height = 0;
  int width = 0;
  std::vector<float> values;

  Raster to_raster() const {
    Raster r(height, width, 1);
    r.data = values;
    return r;
  }
};

struct ChangeMap {
  int height = 0;
  int width = 0;
  std::vector<uint8_t> mask;  // mask = (filtered d >= threshold)
  float threshold = 0.0f;
};

struct SpatialFilterConfig {
  int iterations = 5;
  double kernel_width = 0.1;  // range width of the bilateral weight
  int radius = 2;
  double sigma_spatial = 1.0;
  bool enabled = true;
};

// Pixel-wise Euclidean norms of the translation residuals x_hat - x and
// y_hat - y.
DifferenceImage distance_image(const Raster& original, const Raster& translated);

// Upper clip at mean + 3 sigma, then min-max scale to [0, 1]. A constant
// input maps to all zeros and sets *degenerate when provided.
DifferenceImage clip_normalize(const DifferenceImage& dist, bool* degenerate = nullptr);

// Average of the two normalized distance images; evidence present in only
// one of them is halved.
DifferenceImage combine(const DifferenceImage& dx, const DifferenceImage& dy);

// Iterative bilateral mean-field smoothing over a (2r+1)^2 window. The
// centre pixel is excluded from its own neighbourhood average, as in
// mean-field message passing, so isolated outliers are suppressed rather
// than preserved.
DifferenceImage spatial_filter(const DifferenceImage& d, const SpatialFilterConfig& cfg = {});

// Otsu threshold over a 256-bin histogram: the bin split maximizing the
// between-class variance, ties broken towards the smallest threshold.
// Returns the left edge of the first bin of the upper class.
float otsu_threshold(const DifferenceImage& d, bool* degenerate = nullptr);

// Split index in [0, bins-1): class 0 is bins [0, split], class 1 the rest.
int otsu_split_from_histogram(const std::vector<uint64_t>& histogram);

ChangeMap threshold_map(const DifferenceImage& d, float threshold);

// TP white, TN black, FN red, FP green.
Raster confusion_map(const ChangeMap& map, const std::vector<uint8_t>& truth);

}  // namespace hetcd
