#pragma once

#include <cstdint>
#include <vector>

#include "drgrad/matrix.hpp"
#include "drgrad/mlp.hpp"

namespace drgrad {

enum class OptimizerKind { kSgd, kAdam };

OptimizerKind optimizer_from_string(const std::string& name);
std::string to_string(OptimizerKind kind);

// One state per parameter group (an Mlp or a single matrix). Adam moments
// are allocated lazily on the first step and mirror the parameter shapes.
struct OptimizerState {
  OptimizerKind kind = OptimizerKind::kAdam;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::int64_t step_count = 0;
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;

  static OptimizerState make(OptimizerKind kind, double learning_rate) {
    OptimizerState s;
    s.kind = kind;
    s.learning_rate = learning_rate;
    return s;
  }
};

// Generic update over a parameter list; params[i] and grads[i] must agree in
// shape. sgd: w -= lr * g. adam: bias-corrected moment update.
void optimizer_step(const std::vector<DenseMatrix*>& params,
                    const std::vector<const DenseMatrix*>& grads,
                    OptimizerState& state);

// Canonical per-layer order: weights then bias, layer by layer. Bumps the
// network version.
void optimizer_step(Mlp& net, const ParamGrads& grads, OptimizerState& state);

}  // namespace drgrad
