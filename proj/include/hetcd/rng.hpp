#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace hetcd {

// Deterministic random source. The engine is mt19937_64, whose output
// sequence is fixed by the C++ standard; all distributions are implemented
// here rather than with std::*_distribution, which are implementation
// defined and would break the cross-toolchain reproducibility contract.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  // Independent stream derived from (seed, stream id). Used to keep the
  // init / patch-sampling / dropout / augmentation streams separate, so
  // toggling one consumer does not perturb the others.
  static Rng stream(uint64_t seed, uint64_t stream_id) {
    return Rng(splitmix64(seed ^ splitmix64(stream_id + 0x9e3779b97f4a7c15ull)));
  }

  uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Integer in [0, n), n >= 1. Modulo bias is negligible for n << 2^64.
  uint64_t below(uint64_t n) { return engine_() % n; }

  bool bernoulli(double p) { return uniform() < p; }

  // Standard normal via Box-Muller; one spare value cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    while (u1 == 0.0) u1 = uniform();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  // Normal truncated to [-clip, clip] standard deviations, by rejection.
  double truncated_normal(double stddev, double clip = 2.0) {
    double z = normal();
    while (std::abs(z) > clip) z = normal();
    return stddev * z;
  }

  // Gamma(shape, scale), shape > 0. Marsaglia-Tsang squeeze for shape >= 1,
  // boost by uniform power for shape < 1.
  double gamma(double shape, double scale) {
    if (shape < 1.0) {
      double u = 0.0;
      while (u == 0.0) u = uniform();
      return gamma(shape + 1.0, scale) * std::pow(u, 1.0 / shape);
    }
    double d = shape - 1.0 / 3.0;
    double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x = normal();
      double v = 1.0 + c * x;
      if (v <= 0.0) continue;
      v = v * v * v;
      double u = 0.0;
      while (u == 0.0) u = uniform();
      if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) {
        return d * v * scale;
      }
    }
  }

 private:
  static uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
  }

  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace hetcd
