#pragma once

#include <cstdint>
#include <vector>

#include "hetcd/raster.hpp"

namespace hetcd {

// Two co-registered single-date views of the same scene plus the change
// ground truth. Modality X mimics SAR intensity (multiplicative speckle),
// modality Y an optical sensor (additive Gaussian noise) with a different,
// non-monotone class-to-value mapping.
struct SyntheticScene {
  Raster x;
  Raster y;
  std::vector<uint8_t> truth;
};

struct ToySpec {
  int block = 4;              // scene is a 2x2 grid of block x block class regions
  double sar_looks = 5.0;     // gamma shape of the unit-mean speckle
  double optical_sigma = 0.05;  // additive noise, fraction of the dynamic range
  bool noise = true;
};

// 8x8 two-modality test pattern: four class blocks, and a 2x2 group of
// changed pixels in the bottom-right of each block of Y chosen so that
// every ordered class transition occurs. Ground truth is exactly those 16
// pixels and does not depend on the seed.
SyntheticScene make_toy(uint64_t seed, const ToySpec& spec = {});

struct SceneSpec {
  int height = 128;
  int width = 128;
  int n_classes = 5;
  int channels_x = 1;
  int channels_y = 3;
  double change_fraction = 0.1;
  double sar_looks = 5.0;
  double optical_sigma = 0.05;
  uint64_t seed = 0;        // drives layout, class means and change placement
  uint64_t noise_seed = 1;  // drives the pixel noise only
};

// Scalable heterogeneous scene: a Voronoi class layout, blob-shaped changes
// at t2, per-class means distinct within each modality and non-monotone
// across them. Deterministic given the seeds; the truth depends only on the
// structure seed.
SyntheticScene make_scene(const SceneSpec& spec);

// Natural-log transform used to bring multiplicative SAR-like intensities
// to near-additive statistics before distance computations.
Raster log_intensity(const Raster& r, float floor = 1e-6f);

}  // namespace hetcd
