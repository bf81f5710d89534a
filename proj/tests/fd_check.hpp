#pragma once

// Central finite-difference gradient oracle shared by the unit tests and
// the acceptance suite. Independent of the backward implementations: it
// only re-runs forward passes at perturbed inputs.

#include <cmath>
#include <functional>
#include <vector>

#include "ecgforge/autodiff.hpp"

namespace fd {

using ecgforge::ad::VarPtr;

// Max relative error between analytic grad of `wrt` (after backward on the
// scalar produced by `forward()`) and central differences of forward().
// `forward` must rebuild the graph from current values on every call.
inline double max_rel_error(const std::function<VarPtr()>& forward,
                            const VarPtr& wrt, double h = 1e-5) {
  auto root = forward();
  ecgforge::ad::backward(root);
  std::vector<double> analytic = wrt->grad;

  double worst = 0.0;
  for (std::size_t i = 0; i < wrt->size(); ++i) {
    const double orig = wrt->val[i];
    wrt->val[i] = orig + h;
    const double fp = forward()->val[0];
    wrt->val[i] = orig - h;
    const double fm = forward()->val[0];
    wrt->val[i] = orig;
    const double numeric = (fp - fm) / (2.0 * h);
    const double denom = std::max({std::fabs(analytic[i]), std::fabs(numeric), 1e-8});
    worst = std::max(worst, std::fabs(analytic[i] - numeric) / denom);
  }
  return worst;
}

}  // namespace fd
