#pragma once

#include <utility>

#include "drgrad/router.hpp"

namespace drgrad {

// Accumulators behind the dynamic aggregation weights of the primary task.
// Per step: sigma' <- rho * sigma' + |g1p + gr1p|, sigma'' likewise, then
// (mu_p, mu_pp) = softmax(sigma', sigma''). rho = 1 reproduces the literal
// unbounded accumulation; the default 0.99 keeps the softmax responsive on
// long runs.
struct UpdaterState {
  double sigma_p = 0.0;
  double sigma_pp = 0.0;
  double mu_p = 0.5;
  double mu_pp = 0.5;
  double rho = 0.99;
};

std::pair<double, double> updater_step(UpdaterState& state, const GradientTriple& triple,
                                       const RouterOutput& out);

}  // namespace drgrad
