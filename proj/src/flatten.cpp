#include "drgrad/flatten.hpp"

#include "drgrad/error.hpp"

namespace drgrad {

std::size_t ParamLayout::total() const {
  std::size_t n = 0;
  for (const auto& [r, c] : shapes) n += r * c;
  return n;
}

ParamLayout layout_of(const Mlp& net) {
  ParamLayout layout;
  layout.owner = net.name;
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    layout.shapes.emplace_back(net.weights[l].rows, net.weights[l].cols);
    layout.shapes.emplace_back(net.biases[l].rows, net.biases[l].cols);
  }
  return layout;
}

std::vector<double> flatten(const ParamGrads& grads) {
  std::vector<double> flat;
  std::size_t total = 0;
  for (std::size_t l = 0; l < grads.weight_grads.size(); ++l) {
    total += grads.weight_grads[l].size() + grads.bias_grads[l].size();
  }
  flat.reserve(total);
  for (std::size_t l = 0; l < grads.weight_grads.size(); ++l) {
    flat.insert(flat.end(), grads.weight_grads[l].data.begin(),
                grads.weight_grads[l].data.end());
    flat.insert(flat.end(), grads.bias_grads[l].data.begin(),
                grads.bias_grads[l].data.end());
  }
  return flat;
}

ParamGrads unflatten(const std::vector<double>& flat, const ParamLayout& layout) {
  if (flat.size() != layout.total()) {
    throw ShapeError("unflatten: vector length does not match layout for " +
                     layout.owner);
  }
  ParamGrads grads;
  grads.owner = layout.owner;
  std::size_t offset = 0;
  for (std::size_t i = 0; i < layout.shapes.size(); ++i) {
    const auto [r, c] = layout.shapes[i];
    DenseMatrix m(r, c);
    std::copy(flat.begin() + offset, flat.begin() + offset + r * c, m.data.begin());
    offset += r * c;
    if (i % 2 == 0) {
      grads.weight_grads.push_back(std::move(m));
    } else {
      grads.bias_grads.push_back(std::move(m));
    }
  }
  return grads;
}

}  // namespace drgrad
