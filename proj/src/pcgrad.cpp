#include "drgrad/pcgrad.hpp"

#include <utility>

#include "drgrad/error.hpp"

namespace drgrad {

std::vector<std::vector<double>> pcgrad_project(
    const std::vector<std::vector<double>>& grads, SeededRng& rng) {
  if (grads.size() < 2) throw ShapeError("pcgrad_project: needs at least two tasks");
  const std::size_t n = grads[0].size();
  for (const auto& g : grads) {
    if (g.size() != n) throw ShapeError("pcgrad_project: gradient lengths differ");
  }
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < grads.size(); ++i) {
    for (std::size_t j = 0; j < grads.size(); ++j) {
      if (i != j) pairs.emplace_back(i, j);
    }
  }
  rng.shuffle(pairs);

  std::vector<std::vector<double>> projected = grads;
  for (const auto& [i, j] : pairs) {
    const std::vector<double>& gj = grads[j];
    double dot = 0.0, gj_sq = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      dot += projected[i][k] * gj[k];
      gj_sq += gj[k] * gj[k];
    }
    if (dot < 0.0 && gj_sq > 0.0) {
      const double coef = dot / gj_sq;
      for (std::size_t k = 0; k < n; ++k) projected[i][k] -= coef * gj[k];
    }
  }
  return projected;
}

}  // namespace drgrad
