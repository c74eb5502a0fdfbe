#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

namespace hetcd::nn {

// Central finite differences around the current parameter values. `loss`
// must re-run the full forward pass; any stochastic element (dropout) has
// to be frozen by the caller before checking.
inline double central_difference(const std::function<double()>& loss, double* param, double step) {
  const double orig = *param;
  *param = orig + step;
  const double fp = loss();
  *param = orig - step;
  const double fm = loss();
  *param = orig;
  return (fp - fm) / (2.0 * step);
}

inline double relative_error(double analytic, double numeric) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
  return std::abs(analytic - numeric) / scale;
}

struct GradCheck {
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

// Compares analytic gradients of `params` against central differences of
// `loss`, entry by entry.
inline GradCheck check_gradients(const std::function<double()>& loss, double* params,
                                 const double* analytic, std::size_t n, double step = 1e-5) {
  GradCheck result;
  for (std::size_t i = 0; i < n; ++i) {
    const double numeric = central_difference(loss, params + i, step);
    const double rel = relative_error(analytic[i], numeric);
    if (rel >= result.max_rel_error) {
      result.max_rel_error = rel;
      result.worst_index = i;
      result.worst_analytic = analytic[i];
      result.worst_numeric = numeric;
    }
  }
  return result;
}

}  // namespace hetcd::nn
