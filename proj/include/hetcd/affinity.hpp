#pragma once

#include <cstdint>
#include <vector>

#include "hetcd/raster.hpp"

namespace hetcd {

struct AffinityConfig {
  int patch_size = 20;          // k, sliding-window side
  int stride = 5;               // anchor step, 1 <= stride <= k
  double knn_fraction = 0.75;   // K = round(knn_fraction * k^2)
  bool multiscale = true;
  int threads = 0;              // 0 = auto
};

// Per-pixel change prior alpha in [0, 1], plus how many patches covered
// each pixel. Alpha is kept in double precision; the raster export rounds
// to the float32 carrier. For the multiscale ensemble, counts refer to the
// full resolution passes.
struct PriorMap {
  int height = 0;
  int width = 0;
  std::vector<double> alpha;
  std::vector<int> counts;

  Raster to_raster() const {
    Raster r(height, width, 1);
    for (std::size_t i = 0; i < alpha.size(); ++i) r.data[i] = static_cast<float>(alpha[i]);
    return r;
  }
};

// Number of sliding-window anchor positions for one image, including the
// clamped final anchor that keeps border pixels covered when (dim - k) is
// not a multiple of the stride.
uint64_t patch_count(int height, int width, int k, int stride);

// Gaussian-kernel affinity matrix of one patch. `patch` holds k^2
// pixel-major feature vectors of `channels` entries; the returned matrix is
// n x n row-major with n = k^2, symmetric, unit diagonal.
std::vector<double> patch_affinity(const std::vector<double>& patch, int n_pixels, int channels,
                                   double kernel_width);

// Mean distance to the K-th nearest neighbour over all pixels of the patch,
// self excluded. An all-identical patch yields the epsilon floor (1e-6) and
// sets *degenerate when provided.
double kernel_width(const std::vector<double>& patch, int n_pixels, int channels, int knn,
                    bool* degenerate = nullptr);

// Normalized vertex degrees of the change graph |Ax - Ay|: one value per
// pixel, each in [0, 1].
std::vector<double> patch_alpha(const std::vector<double>& affinity_x,
                                const std::vector<double>& affinity_y, int n_pixels);

PriorMap compute_prior(const NormalizedRaster& x, const NormalizedRaster& y,
                       const AffinityConfig& cfg);

// Ensemble of three passes: k/2 at full resolution, k at full resolution,
// and k at half resolution scaled back up; the three maps are averaged.
PriorMap compute_prior_multiscale(const NormalizedRaster& x, const NormalizedRaster& y,
                                  const AffinityConfig& cfg);

}  // namespace hetcd
