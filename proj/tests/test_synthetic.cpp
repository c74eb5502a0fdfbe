#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>
#include <set>

#include "hetcd/affinity.hpp"
#include "hetcd/change_extraction.hpp"
#include "hetcd/metrics.hpp"
#include "hetcd/rng.hpp"
#include "hetcd/synthetic.hpp"

using namespace hetcd;

TEST_CASE("toy: ground truth is exactly the 16 inserted pixels") {
  const SyntheticScene scene = make_toy(0);
  CHECK(scene.x.height == 8);
  CHECK(scene.x.width == 8);
  CHECK(std::accumulate(scene.truth.begin(), scene.truth.end(), 0) == 16);
  // Bottom-right 2x2 corner of each 4x4 block.
  for (int by = 0; by < 2; ++by)
    for (int bx = 0; bx < 2; ++bx)
      for (int dy = 2; dy < 4; ++dy)
        for (int dx = 2; dx < 4; ++dx) {
          CHECK(scene.truth[(by * 4 + dy) * 8 + (bx * 4 + dx)] == 1);
        }
}

TEST_CASE("toy: noiseless blocks are constant and all transitions occur") {
  ToySpec spec;
  spec.noise = false;
  const SyntheticScene scene = make_toy(0, spec);

  for (int by = 0; by < 2; ++by) {
    for (int bx = 0; bx < 2; ++bx) {
      for (int c = 0; c < scene.x.channels; ++c) {
        const float v = scene.x.at(by * 4, bx * 4, c);
        for (int dy = 0; dy < 4; ++dy)
          for (int dx = 0; dx < 4; ++dx) CHECK(scene.x.at(by * 4 + dy, bx * 4 + dx, c) == v);
      }
    }
  }

  // Recover the class of every Y pixel from its noiseless channel pattern
  // (high/low per channel identifies the tetrahedron vertex) and check that
  // all 12 ordered class transitions appear among the changed pixels.
  const int vertex[4][3] = {{0, 0, 0}, {1, 1, 0}, {1, 0, 1}, {0, 1, 1}};
  auto y_class = [&](int y, int x) {
    int bits[3];
    for (int c = 0; c < 3; ++c) bits[c] = scene.y.at(y, x, c) > 0.5f ? 1 : 0;
    for (int cls = 0; cls < 4; ++cls) {
      if (bits[0] == vertex[cls][0] && bits[1] == vertex[cls][1] && bits[2] == vertex[cls][2]) {
        return cls;
      }
    }
    return -1;
  };
  std::set<std::pair<int, int>> transitions;
  for (int y = 0; y < 8; ++y) {
    for (int x = 0; x < 8; ++x) {
      if (!scene.truth[y * 8 + x]) continue;
      const int from = (y / 4) * 2 + (x / 4);
      const int to = y_class(y, x);
      CHECK(to >= 0);
      CHECK(to != from);
      transitions.insert({from, to});
    }
  }
  CHECK(transitions.size() == 12);
}

TEST_CASE("toy: same seed reproduces the scene, truth ignores the seed") {
  const SyntheticScene a = make_toy(5);
  const SyntheticScene b = make_toy(5);
  const SyntheticScene c = make_toy(6);
  CHECK(a.x.data == b.x.data);
  CHECK(a.y.data == b.y.data);
  CHECK(a.truth == c.truth);
}

TEST_CASE("toy: single-window prior thresholded matches the truth exactly") {
  // Full walkthrough at k = 8, stride = 8: one window covers the pattern.
  const SyntheticScene scene = make_toy(1);
  AffinityConfig cfg;
  cfg.patch_size = 8;
  cfg.stride = 8;
  cfg.multiscale = false;
  const NormalizedRaster xn = normalize(log_intensity(scene.x));
  const NormalizedRaster yn = normalize(scene.y);
  const PriorMap prior = compute_prior(xn, yn, cfg);

  DifferenceImage alpha;
  alpha.height = prior.height;
  alpha.width = prior.width;
  alpha.values.assign(prior.alpha.begin(), prior.alpha.end());
  const ChangeMap map = threshold_map(alpha, otsu_threshold(alpha));
  const MetricsReport report = binary_metrics(map.mask, scene.truth);
  CHECK(report.oa == 1.0);
}

TEST_CASE("speckle is unit mean: noisy and noiseless class values agree") {
  // Monte Carlo over the multiplicative noise used by modality X.
  Rng rng(77);
  const double shape = 5.0;
  double acc = 0.0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) acc += rng.gamma(shape, 1.0 / shape);
  CHECK(acc / n == doctest::Approx(1.0).epsilon(0.02));

  // Unit-mean noise at scene level: two independent noise draws of the same
  // structure agree in their X mean to sampling accuracy.
  SceneSpec spec;
  spec.height = 64;
  spec.width = 64;
  spec.noise_seed = 1;
  const SyntheticScene a = make_scene(spec);
  spec.noise_seed = 2;
  const SyntheticScene b = make_scene(spec);
  double mean_a = 0.0, mean_b = 0.0;
  for (float v : a.x.data) mean_a += v;
  for (float v : b.x.data) mean_b += v;
  mean_a /= a.x.data.size();
  mean_b /= b.x.data.size();
  CHECK(mean_a == doctest::Approx(mean_b).epsilon(0.05));
}

TEST_CASE("scene: deterministic given seeds, truth independent of noise seed") {
  SceneSpec spec;
  spec.height = 40;
  spec.width = 40;
  spec.seed = 3;
  spec.noise_seed = 9;
  const SyntheticScene a = make_scene(spec);
  const SyntheticScene b = make_scene(spec);
  CHECK(a.x.data == b.x.data);
  CHECK(a.y.data == b.y.data);
  CHECK(a.truth == b.truth);

  spec.noise_seed = 10;
  const SyntheticScene c = make_scene(spec);
  CHECK(a.truth == c.truth);
  CHECK(a.x.data != c.x.data);

  spec.seed = 4;
  const SyntheticScene d = make_scene(spec);
  CHECK(a.truth != d.truth);
}

TEST_CASE("scene: change fraction is approximately honoured") {
  SceneSpec spec;
  spec.height = 64;
  spec.width = 64;
  spec.change_fraction = 0.1;
  const SyntheticScene scene = make_scene(spec);
  const int changed = std::accumulate(scene.truth.begin(), scene.truth.end(), 0);
  CHECK(changed >= 0.1 * 64 * 64);
  CHECK(changed <= 0.2 * 64 * 64);  // blob growth can overshoot a little
}

TEST_CASE("scene: rejects fewer than two classes") {
  SceneSpec spec;
  spec.n_classes = 1;
  CHECK_THROWS(make_scene(spec));
}

TEST_CASE("prior on a 128x128 scene with 10% change reaches AUC 0.85") {
  // Median over 5 structure seeds.
  std::vector<double> aucs;
  for (uint64_t seed = 0; seed < 5; ++seed) {
    SceneSpec spec;
    spec.seed = seed;
    spec.noise_seed = seed + 100;
    const SyntheticScene scene = make_scene(spec);
    AffinityConfig cfg;
    cfg.patch_size = 20;
    cfg.stride = 5;
    cfg.multiscale = false;
    const NormalizedRaster xn = normalize(log_intensity(scene.x));
    const NormalizedRaster yn = normalize(scene.y);
    const PriorMap prior = compute_prior(xn, yn, cfg);
    aucs.push_back(roc_auc(prior.alpha, scene.truth));
  }
  std::sort(aucs.begin(), aucs.end());
  CHECK(aucs[2] >= 0.85);
}

TEST_CASE("multiscale prior stays within 0.02 AUC of single scale on a toy scene") {
  std::vector<double> single, multi;
  for (uint64_t seed = 0; seed < 5; ++seed) {
    SceneSpec spec;
    spec.height = 64;
    spec.width = 64;
    spec.seed = seed;
    spec.noise_seed = seed + 50;
    const SyntheticScene scene = make_scene(spec);
    AffinityConfig cfg;
    cfg.patch_size = 20;
    cfg.stride = 5;
    const NormalizedRaster xn = normalize(log_intensity(scene.x));
    const NormalizedRaster yn = normalize(scene.y);
    cfg.multiscale = false;
    single.push_back(roc_auc(compute_prior(xn, yn, cfg).alpha, scene.truth));
    cfg.multiscale = true;
    multi.push_back(roc_auc(compute_prior_multiscale(xn, yn, cfg).alpha, scene.truth));
  }
  std::sort(single.begin(), single.end());
  std::sort(multi.begin(), multi.end());
  CHECK(multi[2] >= single[2] - 0.02);
}

TEST_CASE("log_intensity floors non-positive values") {
  Raster r(1, 2, 1);
  r.data = {0.0f, 1.0f};
  const Raster out = log_intensity(r);
  CHECK(out.data[0] == doctest::Approx(std::log(1e-6f)));
  CHECK(out.data[1] == doctest::Approx(0.0f));
}
