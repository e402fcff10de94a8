#include "drgrad/optimizer.hpp"

#include <cmath>

#include "drgrad/error.hpp"

namespace drgrad {

OptimizerKind optimizer_from_string(const std::string& name) {
  if (name == "sgd") return OptimizerKind::kSgd;
  if (name == "adam") return OptimizerKind::kAdam;
  throw ConfigError("unknown optimizer: " + name);
}

std::string to_string(OptimizerKind kind) {
  return kind == OptimizerKind::kSgd ? "sgd" : "adam";
}

void optimizer_step(const std::vector<DenseMatrix*>& params,
                    const std::vector<const DenseMatrix*>& grads,
                    OptimizerState& state) {
  if (params.size() != grads.size()) {
    throw ShapeError("optimizer_step: param/grad count mismatch");
  }
  if (state.learning_rate <= 0.0) {
    throw NumericError("optimizer_step: learning rate must be positive");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params[i]->same_shape(*grads[i])) {
      throw ShapeError("optimizer_step: shape mismatch at group index " +
                       std::to_string(i));
    }
  }
  if (state.kind == OptimizerKind::kAdam && state.m.empty()) {
    state.m.resize(params.size());
    state.v.resize(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
      state.m[i].assign(params[i]->size(), 0.0);
      state.v[i].assign(params[i]->size(), 0.0);
    }
  }
  state.step_count += 1;
  const double lr = state.learning_rate;
  if (state.kind == OptimizerKind::kSgd) {
    for (std::size_t i = 0; i < params.size(); ++i) {
      double* w = params[i]->data.data();
      const double* g = grads[i]->data.data();
      for (std::size_t k = 0; k < params[i]->size(); ++k) w[k] -= lr * g[k];
    }
    return;
  }
  if (state.m.size() != params.size()) {
    throw ShapeError("optimizer_step: adam state sized for a different group");
  }
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step_count));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step_count));
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (state.m[i].size() != params[i]->size()) {
      throw ShapeError("optimizer_step: adam moment shape mismatch");
    }
    double* w = params[i]->data.data();
    const double* g = grads[i]->data.data();
    double* m = state.m[i].data();
    double* v = state.v[i].data();
    for (std::size_t k = 0; k < params[i]->size(); ++k) {
      m[k] = state.beta1 * m[k] + (1.0 - state.beta1) * g[k];
      v[k] = state.beta2 * v[k] + (1.0 - state.beta2) * g[k] * g[k];
      const double m_hat = m[k] / bc1;
      const double v_hat = v[k] / bc2;
      w[k] -= lr * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
  }
}

void optimizer_step(Mlp& net, const ParamGrads& grads, OptimizerState& state) {
  if (grads.weight_grads.size() != net.num_layers()) {
    throw ShapeError("optimizer_step: grads do not match " + net.name);
  }
  std::vector<DenseMatrix*> params;
  std::vector<const DenseMatrix*> grad_ptrs;
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    params.push_back(&net.weights[l]);
    grad_ptrs.push_back(&grads.weight_grads[l]);
    params.push_back(&net.biases[l]);
    grad_ptrs.push_back(&grads.bias_grads[l]);
  }
  optimizer_step(params, grad_ptrs, state);
  net.version += 1;
}

}  // namespace drgrad
