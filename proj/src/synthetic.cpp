#include "hetcd/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hetcd/error.hpp"
#include "hetcd/rng.hpp"

namespace hetcd {

namespace {

enum StreamId : uint64_t { kStructure = 0x51, kNoiseX = 0x52, kNoiseY = 0x53, kMeans = 0x54 };

// Class signatures of the toy pattern. Both modalities are three-channel
// and place the four classes at the vertices of a regular tetrahedron (any
// two classes differ in exactly two channels), so every class transition is
// equally strong. The modalities remain heterogeneous in their raw domains
// and noise models: X carries SAR-like intensities, geometrically spaced so
// they are evenly spaced after the usual log transform, under unit-mean
// multiplicative speckle; Y carries optical reflectances under additive
// Gaussian noise.
constexpr int kToyChannels = 3;
constexpr int kToyVertex[4][3] = {{0, 0, 0}, {1, 1, 0}, {1, 0, 1}, {0, 1, 1}};
constexpr double kToySarBase = 0.1;
constexpr double kToySarLogSpan = 5.0;  // per-channel intensity ratio e^5
constexpr double kToyOpticalLow = 0.2;
constexpr double kToyOpticalRange = 0.75;

}  // namespace

SyntheticScene make_toy(uint64_t seed, const ToySpec& spec) {
  const int b = spec.block;
  const int side = 2 * b;
  SyntheticScene scene;
  scene.x = Raster(side, side, kToyChannels);
  scene.y = Raster(side, side, kToyChannels);
  scene.truth.assign(static_cast<std::size_t>(side) * side, 0);

  Rng noise_x = Rng::stream(seed, kNoiseX);
  Rng noise_y = Rng::stream(seed, kNoiseY);

  for (int y = 0; y < side; ++y) {
    for (int x = 0; x < side; ++x) {
      const int block_class = (y / b) * 2 + (x / b);
      int class_t2 = block_class;

      // Changed pixels: the 2x2 bottom-right corner of each block of Y takes
      // other classes, assigned cyclically so all 12 ordered transitions
      // appear across the four blocks.
      const int by = y % b, bx = x % b;
      if (by >= b - 2 && bx >= b - 2) {
        const int corner = (by - (b - 2)) * 2 + (bx - (b - 2));  // 0..3
        const int offsets[4] = {1, 2, 3, 2};
        class_t2 = (block_class + offsets[corner]) % 4;
        scene.truth[static_cast<std::size_t>(y) * side + x] = 1;
      }

      for (int ch = 0; ch < kToyChannels; ++ch) {
        double vx = kToySarBase * std::exp(kToySarLogSpan * kToyVertex[block_class][ch]);
        double vy = kToyOpticalLow + kToyOpticalRange * kToyVertex[class_t2][ch];
        if (spec.noise) {
          vx *= noise_x.gamma(spec.sar_looks, 1.0 / spec.sar_looks);
          vy += noise_y.normal(0.0, spec.optical_sigma * kToyOpticalRange);
        }
        scene.x.at(y, x, ch) = static_cast<float>(vx);
        scene.y.at(y, x, ch) = static_cast<float>(vy);
      }
    }
  }
  return scene;
}

SyntheticScene make_scene(const SceneSpec& spec) {
  if (spec.n_classes < 2) throw ConfigError("make_scene: need at least two classes");
  const int h = spec.height, w = spec.width, nc = spec.n_classes;

  Rng structure = Rng::stream(spec.seed, kStructure);
  Rng means_rng = Rng::stream(spec.seed, kMeans);

  // Background: Voronoi layout over the persistent classes 0 .. nc-2; every
  // one of them owns at least one site.
  const int n_persistent = nc - 1;
  const int n_sites = std::max(n_persistent, (h * w) / 512 + n_persistent);
  std::vector<int> site_y(n_sites), site_x(n_sites), site_class(n_sites);
  for (int s = 0; s < n_sites; ++s) {
    site_y[s] = static_cast<int>(structure.below(h));
    site_x[s] = static_cast<int>(structure.below(w));
    site_class[s] = s < n_persistent ? s : static_cast<int>(structure.below(n_persistent));
  }

  std::vector<int> class_t1(static_cast<std::size_t>(h) * w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      int best = 0;
      int64_t best_d = INT64_MAX;
      for (int s = 0; s < n_sites; ++s) {
        const int64_t dy = y - site_y[s], dx = x - site_x[s];
        const int64_t d = dy * dy + dx * dx;
        if (d < best_d) {
          best_d = d;
          best = s;
        }
      }
      class_t1[static_cast<std::size_t>(y) * w + x] = site_class[best];
    }
  }

  // The ephemeral class nc-1 appears at t1 as disk-shaped patches covering
  // about change_fraction of the scene. The change event erases it: at t2
  // each patch has turned into one persistent class, the way a burn scar or
  // receding flood overwrites the previous cover. The ground truth is
  // exactly the ephemeral pixels.
  const int ephemeral = nc - 1;
  std::vector<uint8_t> truth(class_t1.size(), 0);
  const std::size_t target = static_cast<std::size_t>(spec.change_fraction * h * w);
  std::size_t changed = 0;
  const int min_radius = std::max(3, std::min(h, w) / 24);
  const int max_radius = std::max(min_radius + 1, std::min(h, w) / 8);
  std::vector<int> class_t2 = class_t1;
  while (changed < target) {
    const int cy = static_cast<int>(structure.below(h));
    const int cx = static_cast<int>(structure.below(w));
    const int r = min_radius + static_cast<int>(structure.below(max_radius - min_radius));
    const int to_class = static_cast<int>(structure.below(n_persistent));
    for (int y = std::max(0, cy - r); y <= std::min(h - 1, cy + r); ++y) {
      for (int x = std::max(0, cx - r); x <= std::min(w - 1, cx + r); ++x) {
        const int dy = y - cy, dx = x - cx;
        if (dy * dy + dx * dx > r * r) continue;
        std::size_t i = static_cast<std::size_t>(y) * w + x;
        if (!truth[i]) {
          truth[i] = 1;
          class_t1[i] = ephemeral;
          class_t2[i] = to_class;
          ++changed;
        }
      }
    }
  }

  // Per-class means, all distinct within each modality: X intensities are
  // geometrically spaced (even in the log domain used downstream), Y
  // reflectances evenly spaced. Each Y channel swaps one adjacent pair of
  // the class ordering, so the class-to-value mapping is non-monotone
  // across modalities while unchanged content still shares most of its
  // relational structure, as with real sensor pairs.
  auto spread = [&](int idx, int n) { return 0.15 + 0.75 * idx / (n - 1.0); };
  std::vector<double> mean_x(nc);
  for (int c = 0; c < nc; ++c) mean_x[c] = 0.05 * std::pow(4.0, c);

  std::vector<std::vector<double>> mean_y(spec.channels_y, std::vector<double>(nc));
  for (int ch = 0; ch < spec.channels_y; ++ch) {
    std::vector<int> order(nc);
    std::iota(order.begin(), order.end(), 0);
    const int swap_at = static_cast<int>(means_rng.below(nc - 1));
    std::swap(order[swap_at], order[swap_at + 1]);
    for (int c = 0; c < nc; ++c) mean_y[ch][c] = spread(order[c], nc);
  }

  Rng noise_x = Rng::stream(spec.noise_seed, kNoiseX);
  Rng noise_y = Rng::stream(spec.noise_seed, kNoiseY);

  SyntheticScene scene;
  scene.x = Raster(h, w, spec.channels_x);
  scene.y = Raster(h, w, spec.channels_y);
  scene.truth = std::move(truth);
  const double optical_noise = spec.optical_sigma * 0.75;  // fraction of the mean spread
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      for (int ch = 0; ch < spec.channels_x; ++ch) {
        const double speckle = noise_x.gamma(spec.sar_looks, 1.0 / spec.sar_looks);
        scene.x.at(y, x, ch) = static_cast<float>(mean_x[class_t1[i]] * speckle);
      }
      for (int ch = 0; ch < spec.channels_y; ++ch) {
        const double v = mean_y[ch][class_t2[i]] + noise_y.normal(0.0, optical_noise);
        scene.y.at(y, x, ch) = static_cast<float>(v);
      }
    }
  }
  return scene;
}

Raster log_intensity(const Raster& r, float floor) {
  Raster out(r.height, r.width, r.channels);
  for (std::size_t i = 0; i < r.data.size(); ++i) {
    out.data[i] = std::log(std::max(r.data[i], floor));
  }
  return out;
}

}  // namespace hetcd
