#include "hetcd/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>

#include "hetcd/error.hpp"

namespace hetcd {

namespace {

template <typename T>
double roc_auc_impl(const std::vector<T>& score, const std::vector<uint8_t>& truth) {
  if (score.size() != truth.size()) throw ShapeError("roc_auc: size mismatch");
  uint64_t n_pos = 0, n_neg = 0;
  for (uint8_t t : truth) (t ? n_pos : n_neg)++;
  if (n_pos == 0 || n_neg == 0) {
    throw Error("roc_auc: ground truth contains a single class, AUC undefined");
  }

  std::vector<uint32_t> order(score.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](uint32_t a, uint32_t b) { return score[a] < score[b]; });

  // Walk scores ascending, grouping ties. A positive ranked above a negative
  // counts 1, a tie counts 1/2; the sums stay integral in doubled units.
  uint64_t seen_neg = 0;
  uint64_t twice_u = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    uint64_t tie_pos = 0, tie_neg = 0;
    while (j < order.size() && score[order[j]] == score[order[i]]) {
      (truth[order[j]] ? tie_pos : tie_neg)++;
      ++j;
    }
    twice_u += tie_pos * (2 * seen_neg + tie_neg);
    seen_neg += tie_neg;
    i = j;
  }
  return static_cast<double>(twice_u) / (2.0 * static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

}  // namespace

double roc_auc(const std::vector<float>& score, const std::vector<uint8_t>& truth) {
  return roc_auc_impl(score, truth);
}

double roc_auc(const std::vector<double>& score, const std::vector<uint8_t>& truth) {
  return roc_auc_impl(score, truth);
}

Confusion confusion_counts(const std::vector<uint8_t>& mask, const std::vector<uint8_t>& truth) {
  if (mask.size() != truth.size()) throw ShapeError("confusion_counts: size mismatch");
  Confusion c;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (truth[i]) {
      (mask[i] ? c.tp : c.fn)++;
    } else {
      (mask[i] ? c.fp : c.tn)++;
    }
  }
  return c;
}

MetricsReport binary_metrics(const std::vector<uint8_t>& mask, const std::vector<uint8_t>& truth) {
  MetricsReport r;
  r.confusion = confusion_counts(mask, truth);
  const Confusion& c = r.confusion;
  const double n = static_cast<double>(c.total());
  if (n == 0) throw ShapeError("binary_metrics: empty inputs");

  r.oa = static_cast<double>(c.tp + c.tn) / n;
  const double f1_den = static_cast<double>(2 * c.tp + c.fp + c.fn);
  r.f1 = f1_den > 0 ? 2.0 * static_cast<double>(c.tp) / f1_den : 0.0;

  const double pred_pos = static_cast<double>(c.tp + c.fp);
  const double pred_neg = static_cast<double>(c.tn + c.fn);
  const double true_pos = static_cast<double>(c.tp + c.fn);
  const double true_neg = static_cast<double>(c.tn + c.fp);
  const double pe = (pred_pos * true_pos + pred_neg * true_neg) / (n * n);
  r.kappa = pe < 1.0 ? (r.oa - pe) / (1.0 - pe) : 0.0;
  return r;
}

std::string metrics_csv(const MetricsReport& report) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "auc,oa,f1,kappa,tp,tn,fp,fn\n%.9f,%.9f,%.9f,%.9f,%llu,%llu,%llu,%llu\n",
                report.auc, report.oa, report.f1, report.kappa,
                static_cast<unsigned long long>(report.confusion.tp),
                static_cast<unsigned long long>(report.confusion.tn),
                static_cast<unsigned long long>(report.confusion.fp),
                static_cast<unsigned long long>(report.confusion.fn));
  return buf;
}

}  // namespace hetcd
