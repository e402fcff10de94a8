#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "drgrad/matrix.hpp"
#include "drgrad/rng.hpp"

namespace drgrad {

enum class Activation { kRelu, kIdentity, kSigmoid };

Activation activation_from_string(const std::string& name);
std::string to_string(Activation a);

// Dense feed-forward network. `activation` applies to hidden layers; the
// final layer is always linear (logits), nonlinearities at the loss/metric
// boundary are applied by the caller.
struct Mlp {
  std::string name;
  std::vector<std::size_t> layer_dims;  // [in, h1, ..., out]
  Activation activation = Activation::kRelu;
  std::vector<DenseMatrix> weights;  // layer l: [dims[l] x dims[l+1]]
  std::vector<DenseMatrix> biases;   // layer l: [1 x dims[l+1]]
  std::uint64_t version = 0;         // bumped on every parameter update

  static Mlp init(std::string name, std::vector<std::size_t> dims, Activation act,
                  SeededRng& rng);

  std::size_t num_layers() const { return weights.size(); }
  std::size_t input_dim() const { return layer_dims.front(); }
  std::size_t output_dim() const { return layer_dims.back(); }
  std::size_t param_count() const;
};

// Gradients mirroring an Mlp's parameter layout.
struct ParamGrads {
  std::string owner;
  std::vector<DenseMatrix> weight_grads;
  std::vector<DenseMatrix> bias_grads;

  static ParamGrads zeros_like(const Mlp& net);
  void accumulate(const ParamGrads& other);
  void scale(double factor);
};

// Activations recorded by forward(), consumed by backward().
struct MlpCache {
  std::string owner;
  std::uint64_t version = 0;
  DenseMatrix input;
  std::vector<DenseMatrix> pre;   // z per layer
  std::vector<DenseMatrix> post;  // activated output per layer

  const DenseMatrix& output() const { return post.back(); }
};

struct BackwardResult {
  ParamGrads grads;
  DenseMatrix input_grad;
};

MlpCache forward(const Mlp& net, const DenseMatrix& input);
BackwardResult backward(const Mlp& net, const MlpCache& cache,
                        const DenseMatrix& output_grad);

// Central-difference gradient of `loss(output)` w.r.t. every parameter.
// Verification oracle; perturbs parameters in place and restores them.
ParamGrads finite_diff_grad(Mlp& net, const DenseMatrix& input,
                            const std::function<double(const DenseMatrix&)>& loss,
                            double h = 1e-5);

}  // namespace drgrad
