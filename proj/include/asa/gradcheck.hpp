#pragma once

#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "asa/optim.hpp"

namespace asa {

struct GradCheckReport {
  double max_rel_err = 0.0;
  std::string worst_param;
  size_t worst_index = 0;
  size_t coords_checked = 0;
  // Set when the evaluation point sits on (or too close to) a hinge kink;
  // the check is skipped in that case and max_rel_err is meaningless.
  bool non_differentiable_point = false;
};

// Central finite differences against the analytic gradients already stored
// in params (call backward first). loss_fn must re-evaluate the forward
// value at the current parameter values without touching gradients.
//
// kink_distance, when provided, reports the distance from the evaluation
// point to the nearest non-smooth point of loss_fn; points closer than
// 10 * step are flagged as non-differentiable and excluded.
inline GradCheckReport grad_check(const std::function<double()>& loss_fn,
                                  const std::vector<Parameter<double>*>& params,
                                  double step = 1e-4,
                                  const std::function<double()>& kink_distance = {}) {
  GradCheckReport rep;
  if (kink_distance) {
    if (kink_distance() < 10.0 * step) {
      rep.non_differentiable_point = true;
      return rep;
    }
  }
  for (Parameter<double>* p : params) {
    auto& w = p->value->data;
    const auto& g = p->value->grad;
    for (size_t i = 0; i < w.size(); ++i) {
      const double saved = w[i];
      w[i] = saved + step;
      const double lp = loss_fn();
      w[i] = saved - step;
      const double lm = loss_fn();
      w[i] = saved;
      const double numeric = (lp - lm) / (2.0 * step);
      const double analytic = g[i];
      const double denom = std::max({1.0, std::abs(analytic), std::abs(numeric)});
      const double rel = std::abs(analytic - numeric) / denom;
      ++rep.coords_checked;
      if (rel > rep.max_rel_err) {
        rep.max_rel_err = rel;
        rep.worst_param = p->name;
        rep.worst_index = i;
      }
    }
  }
  return rep;
}

}  // namespace asa
