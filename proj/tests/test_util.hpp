#pragma once

#include "dycil/tensor.hpp"

#include <cmath>
#include <functional>
#include <string>
#include <vector>

namespace testutil {

// Relative error with a small absolute floor so near-zero pairs compare sanely.
inline double rel_err(double analytic, double numeric) {
  const double denom = std::max({1e-8, std::abs(analytic), std::abs(numeric)});
  return std::abs(analytic - numeric) / denom;
}

// Central finite differences against the analytic gradients accumulated in
// `store` for every entry of every listed parameter. `loss` must rebuild the
// forward pass from the store's current values (and run no backward).
// Returns the worst relative error seen.
inline double finite_diff_max_err(dycil::ad::ParamStore& store,
                                  const std::vector<std::string>& names,
                                  const std::function<double()>& loss,
                                  double eps = 1e-5) {
  double worst = 0.0;
  for (const auto& name : names) {
    auto& val = store.value(name);
    const auto& grad = store.grad(name);
    for (long i = 0; i < val.rows(); ++i) {
      for (long j = 0; j < val.cols(); ++j) {
        const double keep = val(i, j);
        val(i, j) = keep + eps;
        const double up = loss();
        val(i, j) = keep - eps;
        const double down = loss();
        val(i, j) = keep;
        const double numeric = (up - down) / (2.0 * eps);
        worst = std::max(worst, rel_err(grad(i, j), numeric));
      }
    }
  }
  return worst;
}

}  // namespace testutil
