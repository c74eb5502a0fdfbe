#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace hetcd {

struct Confusion {
  uint64_t tp = 0;
  uint64_t tn = 0;
  uint64_t fp = 0;
  uint64_t fn = 0;
  uint64_t total() const { return tp + tn + fp + fn; }
};

struct MetricsReport {
  double auc = 0.0;
  double oa = 0.0;
  double f1 = 0.0;
  double kappa = 0.0;
  Confusion confusion;
};

// Area under the ROC curve swept over every distinct score (decision rule
// score >= threshold). Computed as the Mann-Whitney statistic normalized by
// #pos * #neg, with ties counting one half; the sweep accumulates integer
// pair counts, so the result is exact. Throws if the truth has one class.
double roc_auc(const std::vector<float>& score, const std::vector<uint8_t>& truth);
double roc_auc(const std::vector<double>& score, const std::vector<uint8_t>& truth);

Confusion confusion_counts(const std::vector<uint8_t>& mask, const std::vector<uint8_t>& truth);

// Overall accuracy, F1 with change as the positive class, and Cohen's kappa
// from the marginals. A degenerate table with chance agreement 1 gets
// kappa = 0, so kappa = 1 still implies a perfect two-class map.
MetricsReport binary_metrics(const std::vector<uint8_t>& mask, const std::vector<uint8_t>& truth);

// CSV with header auc,oa,f1,kappa,tp,tn,fp,fn.
std::string metrics_csv(const MetricsReport& report);

}  // namespace hetcd
