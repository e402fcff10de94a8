#pragma once

#include <vector>

#include "drgrad/rng.hpp"

namespace drgrad {

// Gradient surgery baseline. For every ordered pair (i, j) with g_i . g_j < 0,
// projects g_i onto the plane normal to g_j:
//   g_i <- g_i - (g_i . g_j / |g_j|^2) * g_j
// Projections are computed against the original gradients; the pair order is
// shuffled with the supplied rng.
std::vector<std::vector<double>> pcgrad_project(
    const std::vector<std::vector<double>>& grads, SeededRng& rng);

}  // namespace drgrad
