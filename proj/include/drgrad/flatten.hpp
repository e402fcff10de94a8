#pragma once

#include <string>
#include <vector>

#include "drgrad/mlp.hpp"

namespace drgrad {

// Shape record for a flattened parameter vector: matrices in layer order,
// weights before biases per layer, row-major within each matrix.
struct ParamLayout {
  std::string owner;
  std::vector<std::pair<std::size_t, std::size_t>> shapes;  // (rows, cols) interleaved w/b

  std::size_t total() const;
};

ParamLayout layout_of(const Mlp& net);

std::vector<double> flatten(const ParamGrads& grads);
ParamGrads unflatten(const std::vector<double>& flat, const ParamLayout& layout);

}  // namespace drgrad
