#include "drgrad/updater.hpp"

#include <cmath>
#include <vector>

#include "drgrad/error.hpp"

namespace drgrad {

std::pair<double, double> updater_step(UpdaterState& state, const GradientTriple& triple,
                                       const RouterOutput& out) {
  if (state.rho <= 0.0 || state.rho > 1.0) {
    throw ConfigError("updater_step: rho must be in (0, 1]");
  }
  if (triple.g1p.size() != out.gr1p.size() || triple.g1pp.size() != out.gr1pp.size()) {
    throw ShapeError("updater_step: router output does not match triple");
  }
  double sum_p = 0.0, sum_pp = 0.0;
  for (std::size_t i = 0; i < triple.g1p.size(); ++i) {
    const double a = triple.g1p[i] + out.gr1p[i];
    const double b = triple.g1pp[i] + out.gr1pp[i];
    sum_p += a * a;
    sum_pp += b * b;
  }
  state.sigma_p = state.rho * state.sigma_p + std::sqrt(sum_p);
  state.sigma_pp = state.rho * state.sigma_pp + std::sqrt(sum_pp);

  const double peak = std::max(state.sigma_p, state.sigma_pp);
  const double ep = std::exp(state.sigma_p - peak);
  const double epp = std::exp(state.sigma_pp - peak);
  state.mu_p = ep / (ep + epp);
  state.mu_pp = epp / (ep + epp);
  return {state.mu_p, state.mu_pp};
}

}  // namespace drgrad
