#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace hetcd {

// Closed-form two-hypothesis fixture: a pixel pair (x, y) is correlated
// Gaussian under "no change" and independent with a shifted y mean under
// "change". The translation G is the fixed affine regression of x on y
// under the no-change law.
struct TwoHypothesisModel {
  double p_h0 = 0.8;
  double mu_x = 0.0;
  double mu_y = 0.0;
  double sigma_x = 1.0;
  double sigma_y = 1.0;
  double rho = 0.9;       // no-change correlation
  double h1_shift = 2.0;  // y mean shift under change, in sigma_y units

  double p_h1() const { return 1.0 - p_h0; }
  double translate(double y) const {  // G(y), affine
    return mu_x + rho * sigma_x / sigma_y * (y - mu_y);
  }
};

// Likelihood ratio p(x,y|H1)/p(x,y|H0).
double likelihood_ratio(double x, double y, const TwoHypothesisModel& model);

// psi = 1 / (P(H0) + P(H1) * Lambda), in (0, 1/P(H0)]. The Lambda -> inf
// limit is returned as 0 with *at_limit set.
double psi(double x, double y, const TwoHypothesisModel& model, bool* at_limit = nullptr);

struct EquivalenceReport {
  double conditional_mse = 0.0;   // E[(G(y)-x)^2 | H0], rejection estimator
  double weighted_mse = 0.0;      // E[psi * (G(y)-x)^2], unconditional draws
  double rel_difference = 0.0;    // |conditional - weighted| / conditional
  double min_psi = 0.0;
  double max_psi = 0.0;
  bool psi_in_bounds = true;      // every sample satisfied 0 < psi <= 1/P(H0)
  double surrogate_mse = 0.0;     // same weighting with the pipeline-style 1 - alpha
  double surrogate_rel_difference = 0.0;
  uint64_t n_total = 0;
  uint64_t n_h0 = 0;
};

// Monte Carlo comparison of the H0-conditional MSE against the psi-weighted
// unconditional MSE on the fixture. The surrogate columns repeat the
// weighted estimator with a data-driven 1 - alpha weight in place of psi,
// quantifying how far that approximation sits from the exact identity.
EquivalenceReport verify_equivalence(const TwoHypothesisModel& model, uint64_t n_samples,
                                     uint64_t seed);

// CSV: one row per seed plus a "mean" row; columns mirror EquivalenceReport.
std::string equivalence_csv(const std::vector<EquivalenceReport>& reports);

}  // namespace hetcd
