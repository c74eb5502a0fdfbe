#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "hetcd/error.hpp"
#include "hetcd/theory.hpp"

using namespace hetcd;

TEST_CASE("psi endpoints follow the likelihood ratio") {
  TwoHypothesisModel m;
  m.p_h0 = 0.8;

  // A point far out on the no-change correlation ridge (y ~ rho * x) is far
  // more likely under H0 than under the independent shifted H1, so Lambda
  // vanishes and psi approaches its cap 1/P(H0).
  const double lambda = likelihood_ratio(10.0, 9.0, m);
  CHECK(lambda < 1e-6);  // not exactly 0 for Gaussians, but vanishing
  CHECK(psi(10.0, 9.0, m) == doctest::Approx(1.0 / 0.8).epsilon(1e-4));

  // Lambda -> infinity: a point ruled out by the H0 correlation but not by
  // the independent H1 law; psi tends to 0 from above.
  const double p = psi(3.0, 40.0, m);
  CHECK(p >= 0.0);
  CHECK(p < 1e-6);

  // At any sample, psi satisfies the defining identity 1/(p0 + p1*Lambda);
  // Lambda == 1 would give exactly 1 since the priors sum to one.
  const double l = likelihood_ratio(0.5, 1.0, m);
  const double expected = 1.0 / (0.8 + 0.2 * l);
  CHECK(psi(0.5, 1.0, m) == doctest::Approx(expected));
}

TEST_CASE("psi bound holds on every sample") {
  TwoHypothesisModel m;
  m.p_h0 = 0.8;
  const EquivalenceReport r = verify_equivalence(m, 20000, 1);
  CHECK(r.psi_in_bounds);
  CHECK(r.min_psi > 0.0);
  CHECK(r.max_psi <= 1.0 / 0.8 + 1e-15);
}

TEST_CASE("degenerate model with P(H0) ~ 1 makes both estimators agree") {
  TwoHypothesisModel m;
  m.p_h0 = 0.999999;
  const EquivalenceReport r = verify_equivalence(m, 50000, 2);
  // psi == 1/(p0 + p1*Lambda) ~ 1 for all samples, so the weighted and
  // conditional estimators coincide up to sampling noise.
  CHECK(r.rel_difference <= 0.02);
}

TEST_CASE("conditional and psi-weighted estimators agree within 2% over 10 seeds") {
  TwoHypothesisModel m;
  m.p_h0 = 0.8;
  double mean_rel = 0.0;
  for (uint64_t seed = 0; seed < 10; ++seed) {
    const EquivalenceReport r = verify_equivalence(m, 100000, seed);
    CHECK(r.psi_in_bounds);
    mean_rel += r.rel_difference;
  }
  CHECK(mean_rel / 10.0 <= 0.02);
}

TEST_CASE("relative difference shrinks with the sample count") {
  TwoHypothesisModel m;
  m.p_h0 = 0.8;
  int monotone = 0;
  for (uint64_t seed = 0; seed < 10; ++seed) {
    const double r3 = verify_equivalence(m, 1000, seed).rel_difference;
    const double r4 = verify_equivalence(m, 10000, seed).rel_difference;
    const double r5 = verify_equivalence(m, 100000, seed).rel_difference;
    if (r4 <= r3 && r5 <= r4) ++monotone;
  }
  CHECK(monotone >= 8);
}

TEST_CASE("the pipeline surrogate weight is biased and the report shows it") {
  TwoHypothesisModel m;
  m.p_h0 = 0.8;
  const EquivalenceReport r = verify_equivalence(m, 100000, 3);
  CHECK(std::isfinite(r.surrogate_mse));
  CHECK(r.surrogate_rel_difference > r.rel_difference);
}

TEST_CASE("sample floor is enforced") {
  TwoHypothesisModel m;
  CHECK_THROWS_AS(verify_equivalence(m, 100, 0), ConfigError);
}

TEST_CASE("csv report carries one row per seed and a mean row") {
  TwoHypothesisModel m;
  std::vector<EquivalenceReport> reports;
  reports.push_back(verify_equivalence(m, 2000, 0));
  reports.push_back(verify_equivalence(m, 2000, 1));
  const std::string csv = equivalence_csv(reports);
  CHECK(csv.find("seed,conditional_mse") == 0);
  CHECK(csv.find("\nmean,") != std::string::npos);
}
