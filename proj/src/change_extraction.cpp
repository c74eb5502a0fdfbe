#include "hetcd/change_extraction.hpp"

#include <algorithm>
#include <cmath>

#include "hetcd/error.hpp"

namespace hetcd {

namespace {

constexpr int kOtsuBins = 256;

void require_same_size(const DifferenceImage& a, const DifferenceImage& b, const char* what) {
  if (a.height != b.height || a.width != b.width) throw ShapeError(std::string(what) + ": size mismatch");
}

}  // namespace

DifferenceImage distance_image(const Raster& original, const Raster& translated) {
  if (!original.same_shape(translated)) throw ShapeError("distance_image: raster shape mismatch");
  DifferenceImage d;
  d.height = original.height;
  d.width = original.width;
  d.values.resize(original.band_size());
  for (int y = 0; y < original.height; ++y) {
    for (int x = 0; x < original.width; ++x) {
      double acc = 0.0;
      for (int c = 0; c < original.channels; ++c) {
        const double diff = static_cast<double>(translated.at(y, x, c)) - original.at(y, x, c);
        acc += diff * diff;
      }
      d.values[static_cast<std::size_t>(y) * original.width + x] = static_cast<float>(std::sqrt(acc));
    }
  }
  return d;
}

DifferenceImage clip_normalize(const DifferenceImage& dist, bool* degenerate) {
  const std::size_t n = dist.values.size();
  if (n == 0) throw ShapeError("clip_normalize: empty image");
  double mean = 0.0;
  for (float v : dist.values) mean += v;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (float v : dist.values) {
    const double d = v - mean;
    var += d * d;
  }
  var /= static_cast<double>(n);
  const double clip = mean + 3.0 * std::sqrt(var);

  DifferenceImage out;
  out.height = dist.height;
  out.width = dist.width;
  out.values.resize(n);
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    const double v = std::min(static_cast<double>(dist.values[i]), clip);
    out.values[i] = static_cast<float>(v);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (hi <= lo) {
    if (degenerate) *degenerate = true;
    std::fill(out.values.begin(), out.values.end(), 0.0f);
    return out;
  }
  if (degenerate) *degenerate = false;
  const double scale = 1.0 / (hi - lo);
  for (float& v : out.values) v = static_cast<float>((v - lo) * scale);
  return out;
}

DifferenceImage combine(const DifferenceImage& dx, const DifferenceImage& dy) {
  require_same_size(dx, dy, "combine");
  const DifferenceImage nx = clip_normalize(dx);
  const DifferenceImage ny = clip_normalize(dy);
  DifferenceImage out;
  out.height = dx.height;
  out.width = dx.width;
  out.values.resize(dx.values.size());
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    out.values[i] = 0.5f * (nx.values[i] + ny.values[i]);
  }
  return out;
}

DifferenceImage spatial_filter(const DifferenceImage& d, const SpatialFilterConfig& cfg) {
  if (!cfg.enabled || cfg.iterations <= 0) return d;
  const int h = d.height, w = d.width, r = cfg.radius;
  const double inv_spatial = 1.0 / (2.0 * cfg.sigma_spatial * cfg.sigma_spatial);
  const double inv_range = 1.0 / (2.0 * cfg.kernel_width * cfg.kernel_width);

  std::vector<float> cur = d.values;
  std::vector<float> next(cur.size());
  for (int it = 0; it < cfg.iterations; ++it) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const double vi = cur[static_cast<std::size_t>(y) * w + x];
        double num = 0.0, den = 0.0;
        const int y0 = std::max(0, y - r), y1 = std::min(h - 1, y + r);
        const int x0 = std::max(0, x - r), x1 = std::min(w - 1, x + r);
        for (int yy = y0; yy <= y1; ++yy) {
          for (int xx = x0; xx <= x1; ++xx) {
            if (yy == y && xx == x) continue;
            const double vj = cur[static_cast<std::size_t>(yy) * w + xx];
            const double ds = static_cast<double>(yy - y) * (yy - y) + static_cast<double>(xx - x) * (xx - x);
            const double dr = (vi - vj) * (vi - vj);
            const double wgt = std::exp(-ds * inv_spatial - dr * inv_range);
            num += wgt * vj;
            den += wgt;
          }
        }
        next[static_cast<std::size_t>(y) * w + x] = static_cast<float>(num / den);
      }
    }
    std::swap(cur, next);
  }

  DifferenceImage out;
  out.height = h;
  out.width = w;
  out.values = std::move(cur);
  return out;
}

int otsu_split_from_histogram(const std::vector<uint64_t>& histogram) {
  const int bins = static_cast<int>(histogram.size());
  if (bins < 2) throw ConfigError("otsu: need at least two bins");
  uint64_t total = 0, total_weighted = 0;
  for (int b = 0; b < bins; ++b) {
    total += histogram[b];
    total_weighted += histogram[b] * static_cast<uint64_t>(b);
  }
  if (total == 0) throw ConfigError("otsu: empty histogram");

  // Between-class variance from exact integer prefix sums:
  //   sigma_b^2(s) = (s0*n1 - s1*n0)^2 / (n * n0 * n1)
  // up to the constant n; ties keep the smallest split.
  int best_split = 0;
  double best_score = -1.0;
  uint64_t n0 = 0, s0 = 0;
  for (int s = 0; s < bins - 1; ++s) {
    n0 += histogram[s];
    s0 += histogram[s] * static_cast<uint64_t>(s);
    const uint64_t n1 = total - n0;
    if (n0 == 0 || n1 == 0) continue;
    const uint64_t s1 = total_weighted - s0;
    const double a = static_cast<double>(s0) * static_cast<double>(n1) -
                     static_cast<double>(s1) * static_cast<double>(n0);
    const double score = a * a / (static_cast<double>(n0) * static_cast<double>(n1));
    if (score > best_score) {
      best_score = score;
      best_split = s;
    }
  }
  return best_split;
}

float otsu_threshold(const DifferenceImage& d, bool* degenerate) {
  if (d.values.empty()) throw ShapeError("otsu_threshold: empty image");
  float lo = d.values[0], hi = d.values[0];
  for (float v : d.values) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (hi <= lo) {
    if (degenerate) *degenerate = true;
    return lo;
  }
  if (degenerate) *degenerate = false;

  std::vector<uint64_t> hist(kOtsuBins, 0);
  const double scale = static_cast<double>(kOtsuBins) / (static_cast<double>(hi) - lo);
  for (float v : d.values) {
    int b = static_cast<int>((static_cast<double>(v) - lo) * scale);
    b = std::clamp(b, 0, kOtsuBins - 1);
    hist[static_cast<std::size_t>(b)]++;
  }
  const int split = otsu_split_from_histogram(hist);
  return static_cast<float>(lo + (static_cast<double>(split) + 1.0) / kOtsuBins * (static_cast<double>(hi) - lo));
}

ChangeMap threshold_map(const DifferenceImage& d, float threshold) {
  ChangeMap map;
  map.height = d.height;
  map.width = d.width;
  map.threshold = threshold;
  map.mask.resize(d.values.size());
  for (std::size_t i = 0; i < d.values.size(); ++i) map.mask[i] = d.values[i] >= threshold;
  return map;
}

Raster confusion_map(const ChangeMap& map, const std::vector<uint8_t>& truth) {
  if (truth.size() != map.mask.size()) throw ShapeError("confusion_map: truth size mismatch");
  Raster rgb(map.height, map.width, 3, 0.0f);
  for (int y = 0; y < map.height; ++y) {
    for (int x = 0; x < map.width; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * map.width + x;
      const bool m = map.mask[i], t = truth[i];
      float r = 0.0f, g = 0.0f, b = 0.0f;
      if (m && t) r = g = b = 1.0f;       // true positive: white
      else if (!m && t) r = 1.0f;         // missed change: red
      else if (m && !t) g = 1.0f;         // false alarm: green
      rgb.at(y, x, 0) = r;
      rgb.at(y, x, 1) = g;
      rgb.at(y, x, 2) = b;
    }
  }
  return rgb;
}

}  // namespace hetcd
