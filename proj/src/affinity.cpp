#include "hetcd/affinity.hpp"

#include <algorithm>
#include <cmath>

#include "hetcd/error.hpp"
#include "hetcd/parallel.hpp"

namespace hetcd {

namespace {

constexpr double kWidthFloor = 1e-6;

// Anchor offsets {0, stride, 2*stride, ...} with a final anchor clamped to
// dim - k so the last pixels are always covered.
std::vector<int> anchor_positions(int dim, int k, int stride) {
  std::vector<int> anchors;
  for (int a = 0; a + k <= dim; a += stride) anchors.push_back(a);
  if (anchors.empty() || anchors.back() != dim - k) anchors.push_back(dim - k);
  return anchors;
}

// Pixel-major feature vectors of a k x k window, converted to double.
std::vector<double> extract_patch(const Raster& r, int y0, int x0, int k) {
  std::vector<double> patch(static_cast<std::size_t>(k) * k * r.channels);
  std::size_t idx = 0;
  for (int y = y0; y < y0 + k; ++y) {
    for (int x = x0; x < x0 + k; ++x) {
      for (int c = 0; c < r.channels; ++c) patch[idx++] = r.at(y, x, c);
    }
  }
  return patch;
}

// Upper-triangle pairwise squared Euclidean distances, mirrored to a full
// n x n matrix with zero diagonal.
void squared_distances(const std::vector<double>& patch, int n, int channels,
                       std::vector<double>& d2) {
  d2.assign(static_cast<std::size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i) {
    const double* pi = patch.data() + static_cast<std::size_t>(i) * channels;
    for (int j = i + 1; j < n; ++j) {
      const double* pj = patch.data() + static_cast<std::size_t>(j) * channels;
      double acc = 0.0;
      for (int c = 0; c < channels; ++c) {
        const double d = pi[c] - pj[c];
        acc += d * d;
      }
      d2[static_cast<std::size_t>(i) * n + j] = acc;
      d2[static_cast<std::size_t>(j) * n + i] = acc;
    }
  }
}

double width_from_distances(const std::vector<double>& d2, int n, int knn, bool* degenerate) {
  // K-th nearest neighbour distance per pixel, self excluded, then averaged.
  std::vector<double> row(n - 1);
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    const double* di = d2.data() + static_cast<std::size_t>(i) * n;
    int m = 0;
    for (int j = 0; j < n; ++j) {
      if (j != i) row[m++] = di[j];
    }
    std::nth_element(row.begin(), row.begin() + (knn - 1), row.end());
    acc += std::sqrt(row[knn - 1]);
  }
  double width = acc / n;
  if (width <= 0.0) {
    if (degenerate) *degenerate = true;
    return kWidthFloor;
  }
  if (degenerate) *degenerate = false;
  return width;
}

void affinity_from_distances(const std::vector<double>& d2, int n, double width,
                             std::vector<double>& a) {
  const double inv_h2 = 1.0 / (width * width);
  a.resize(static_cast<std::size_t>(n) * n);
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = std::exp(-d2[i] * inv_h2);
}

void validate(const Raster& x, const Raster& y, const AffinityConfig& cfg) {
  if (x.height != y.height || x.width != y.width) {
    throw ShapeError("prior: images must share height and width");
  }
  const int k = cfg.patch_size;
  if (k < 2) throw ConfigError("prior: patch size must be >= 2");
  if (k > std::min(x.height, x.width)) {
    throw ConfigError("prior: patch size exceeds image dimensions");
  }
  if (cfg.stride < 1 || cfg.stride > k) {
    throw ConfigError("prior: stride must satisfy 1 <= stride <= patch size");
  }
}

int knn_from_config(const AffinityConfig& cfg) {
  const int n = cfg.patch_size * cfg.patch_size;
  int knn = static_cast<int>(std::lround(cfg.knn_fraction * n));
  return std::clamp(knn, 1, n - 1);
}

PriorMap prior_on_rasters(const Raster& x, const Raster& y, const AffinityConfig& cfg) {
  validate(x, y, cfg);
  const int k = cfg.patch_size;
  const int n = k * k;
  const int knn = knn_from_config(cfg);

  const std::vector<int> rows = anchor_positions(x.height, k, cfg.stride);
  const std::vector<int> cols = anchor_positions(x.width, k, cfg.stride);
  const std::size_t n_patches = rows.size() * cols.size();

  // Map stage: per-patch vertex degrees, computed independently. The reduce
  // stage below runs in patch order, so results do not depend on the thread
  // count.
  std::vector<std::vector<double>> patch_values(n_patches);
  parallel_for(n_patches, cfg.threads, [&](std::size_t p) {
    thread_local std::vector<double> d2, ax, ay;
    const int y0 = rows[p / cols.size()];
    const int x0 = cols[p % cols.size()];
    const std::vector<double> px = extract_patch(x, y0, x0, k);
    const std::vector<double> py = extract_patch(y, y0, x0, k);
    squared_distances(px, n, x.channels, d2);
    const double hx = width_from_distances(d2, n, knn, nullptr);
    affinity_from_distances(d2, n, hx, ax);
    squared_distances(py, n, y.channels, d2);
    const double hy = width_from_distances(d2, n, knn, nullptr);
    affinity_from_distances(d2, n, hy, ay);
    patch_values[p] = patch_alpha(ax, ay, n);
  });

  PriorMap prior;
  prior.height = x.height;
  prior.width = x.width;
  prior.counts.assign(static_cast<std::size_t>(x.height) * x.width, 0);
  std::vector<double> sums(prior.counts.size(), 0.0);
  for (std::size_t p = 0; p < n_patches; ++p) {
    const int y0 = rows[p / cols.size()];
    const int x0 = cols[p % cols.size()];
    const std::vector<double>& vals = patch_values[p];
    for (int dy = 0; dy < k; ++dy) {
      for (int dx = 0; dx < k; ++dx) {
        const std::size_t pix = static_cast<std::size_t>(y0 + dy) * x.width + (x0 + dx);
        sums[pix] += vals[static_cast<std::size_t>(dy) * k + dx];
        prior.counts[pix] += 1;
      }
    }
  }

  prior.alpha.resize(sums.size());
  for (std::size_t i = 0; i < sums.size(); ++i) {
    prior.alpha[i] = sums[i] / prior.counts[i];
  }
  return prior;
}

}  // namespace

uint64_t patch_count(int height, int width, int k, int stride) {
  if (k > height || k > width || stride < 1) throw ConfigError("patch_count: invalid geometry");
  auto axis = [&](int dim) {
    return static_cast<uint64_t>(anchor_positions(dim, k, stride).size());
  };
  return axis(height) * axis(width);
}

std::vector<double> patch_affinity(const std::vector<double>& patch, int n_pixels, int channels,
                                   double kernel_width) {
  if (kernel_width <= 0.0) throw ConfigError("patch_affinity: kernel width must be positive");
  if (patch.size() != static_cast<std::size_t>(n_pixels) * channels) {
    throw ShapeError("patch_affinity: patch size mismatch");
  }
  std::vector<double> d2, a;
  squared_distances(patch, n_pixels, channels, d2);
  affinity_from_distances(d2, n_pixels, kernel_width, a);
  return a;
}

double kernel_width(const std::vector<double>& patch, int n_pixels, int channels, int knn,
                    bool* degenerate) {
  if (n_pixels < 2) throw ConfigError("kernel_width: need at least two pixels");
  if (knn < 1 || knn > n_pixels - 1) throw ConfigError("kernel_width: K out of range");
  if (patch.size() != static_cast<std::size_t>(n_pixels) * channels) {
    throw ShapeError("kernel_width: patch size mismatch");
  }
  std::vector<double> d2;
  squared_distances(patch, n_pixels, channels, d2);
  return width_from_distances(d2, n_pixels, knn, degenerate);
}

std::vector<double> patch_alpha(const std::vector<double>& affinity_x,
                                const std::vector<double>& affinity_y, int n_pixels) {
  const std::size_t n = static_cast<std::size_t>(n_pixels);
  if (affinity_x.size() != n * n || affinity_y.size() != n * n) {
    throw ShapeError("patch_alpha: affinity matrices must be n^2 x n^2");
  }
  std::vector<double> alpha(n);
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      acc += std::abs(affinity_x[i * n + j] - affinity_y[i * n + j]);
    }
    alpha[i] = acc / static_cast<double>(n);
  }
  return alpha;
}

PriorMap compute_prior(const NormalizedRaster& x, const NormalizedRaster& y,
                       const AffinityConfig& cfg) {
  return prior_on_rasters(x.raster, y.raster, cfg);
}

PriorMap compute_prior_multiscale(const NormalizedRaster& x, const NormalizedRaster& y,
                                  const AffinityConfig& cfg) {
  if (cfg.patch_size % 2 != 0) throw ConfigError("multiscale prior: patch size must be even");
  validate(x.raster, y.raster, cfg);

  AffinityConfig small = cfg;
  small.patch_size = cfg.patch_size / 2;
  small.stride = std::min(cfg.stride, small.patch_size);
  PriorMap fine = prior_on_rasters(x.raster, y.raster, small);

  PriorMap base = prior_on_rasters(x.raster, y.raster, cfg);

  const Raster xh = downsample2(x.raster);
  const Raster yh = downsample2(y.raster);
  if (cfg.patch_size > std::min(xh.height, xh.width)) {
    throw ConfigError("multiscale prior: image too small for the half-resolution pass");
  }
  PriorMap half = prior_on_rasters(xh, yh, cfg);
  Raster coarse = upsample_bilinear(half.to_raster(), x.raster.height, x.raster.width);

  PriorMap out;
  out.height = base.height;
  out.width = base.width;
  out.alpha.resize(base.alpha.size());
  out.counts.resize(base.counts.size());
  for (std::size_t i = 0; i < out.alpha.size(); ++i) {
    const double mean = (fine.alpha[i] + base.alpha[i] + coarse.data[i]) / 3.0;
    out.alpha[i] = std::clamp(mean, 0.0, 1.0);
    out.counts[i] = fine.counts[i] + base.counts[i];
  }
  return out;
}

}  // namespace hetcd
