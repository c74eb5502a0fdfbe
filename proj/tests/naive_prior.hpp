#pragma once

// Test-side oracle: a direct nested-loop transliteration of the sliding
// window prior, kept independent of the optimized engine. Used by the unit
// tests and the acceptance suite.

#include <algorithm>
#include <cmath>
#include <vector>

#include "hetcd/raster.hpp"

namespace hetcd::testing {

inline std::vector<double> naive_prior(const Raster& x, const Raster& y, int k, int stride,
                                       double knn_fraction) {
  const int n = k * k;
  const int knn = std::clamp(static_cast<int>(std::lround(knn_fraction * n)), 1, n - 1);

  auto axis_anchors = [&](int dim) {
    std::vector<int> a;
    for (int p = 0; p + k <= dim; p += stride) a.push_back(p);
    if (a.empty() || a.back() != dim - k) a.push_back(dim - k);
    return a;
  };

  auto pixel_distance = [&](const Raster& img, int y1, int x1, int y2, int x2) {
    double acc = 0.0;
    for (int c = 0; c < img.channels; ++c) {
      const double d = static_cast<double>(img.at(y1, x1, c)) - img.at(y2, x2, c);
      acc += d * d;
    }
    return std::sqrt(acc);
  };

  auto patch_matrix = [&](const Raster& img, int y0, int x0) {
    std::vector<double> dist(static_cast<std::size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        dist[static_cast<std::size_t>(i) * n + j] =
            pixel_distance(img, y0 + i / k, x0 + i % k, y0 + j / k, x0 + j % k);
      }
    }
    double width = 0.0;
    for (int i = 0; i < n; ++i) {
      std::vector<double> others;
      for (int j = 0; j < n; ++j)
        if (j != i) others.push_back(dist[static_cast<std::size_t>(i) * n + j]);
      std::sort(others.begin(), others.end());
      width += others[knn - 1];
    }
    width /= n;
    if (width <= 0.0) width = 1e-6;
    std::vector<double> aff(dist.size());
    for (std::size_t i = 0; i < dist.size(); ++i) {
      aff[i] = std::exp(-(dist[i] * dist[i]) / (width * width));
    }
    return aff;
  };

  std::vector<double> sums(static_cast<std::size_t>(x.height) * x.width, 0.0);
  std::vector<int> counts(sums.size(), 0);
  for (int y0 : axis_anchors(x.height)) {
    for (int x0 : axis_anchors(x.width)) {
      const std::vector<double> ax = patch_matrix(x, y0, x0);
      const std::vector<double> ay = patch_matrix(y, y0, x0);
      for (int i = 0; i < n; ++i) {
        double alpha = 0.0;
        for (int j = 0; j < n; ++j) {
          alpha += std::abs(ax[static_cast<std::size_t>(i) * n + j] -
                            ay[static_cast<std::size_t>(i) * n + j]);
        }
        alpha /= n;
        const std::size_t pix = static_cast<std::size_t>(y0 + i / k) * x.width + (x0 + i % k);
        sums[pix] += alpha;
        counts[pix] += 1;
      }
    }
  }
  for (std::size_t i = 0; i < sums.size(); ++i) sums[i] /= counts[i];
  return sums;
}

}  // namespace hetcd::testing
