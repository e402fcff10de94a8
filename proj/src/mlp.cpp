#include "drgrad/mlp.hpp"

#include <cmath>
#include <utility>

#include "drgrad/error.hpp"

namespace drgrad {

Activation activation_from_string(const std::string& name) {
  if (name == "relu") return Activation::kRelu;
  if (name == "identity") return Activation::kIdentity;
  if (name == "sigmoid") return Activation::kSigmoid;
  throw ConfigError("unknown activation: " + name);
}

std::string to_string(Activation a) {
  switch (a) {
    case Activation::kRelu: return "relu";
    case Activation::kIdentity: return "identity";
    case Activation::kSigmoid: return "sigmoid";
  }
  return "relu";
}

Mlp Mlp::init(std::string name, std::vector<std::size_t> dims, Activation act,
              SeededRng& rng) {
  if (dims.size() < 2) throw ConfigError("Mlp " + name + ": needs at least two dims");
  for (std::size_t d : dims) {
    if (d == 0) throw ConfigError("Mlp " + name + ": zero layer width");
  }
  Mlp net;
  net.name = std::move(name);
  net.layer_dims = std::move(dims);
  net.activation = act;
  for (std::size_t l = 0; l + 1 < net.layer_dims.size(); ++l) {
    const std::size_t fan_in = net.layer_dims[l];
    const std::size_t fan_out = net.layer_dims[l + 1];
    DenseMatrix w(fan_in, fan_out);
    for (double& v : w.data) v = rng.glorot_uniform(fan_in, fan_out);
    net.weights.push_back(std::move(w));
    net.biases.emplace_back(1, fan_out);
  }
  return net;
}

std::size_t Mlp::param_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    n += weights[l].size() + biases[l].size();
  }
  return n;
}

ParamGrads ParamGrads::zeros_like(const Mlp& net) {
  ParamGrads g;
  g.owner = net.name;
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    g.weight_grads.emplace_back(net.weights[l].rows, net.weights[l].cols);
    g.bias_grads.emplace_back(1, net.biases[l].cols);
  }
  return g;
}

void ParamGrads::accumulate(const ParamGrads& other) {
  if (weight_grads.size() != other.weight_grads.size()) {
    throw ShapeError("ParamGrads::accumulate: layer count mismatch");
  }
  for (std::size_t l = 0; l < weight_grads.size(); ++l) {
    add_inplace(weight_grads[l], other.weight_grads[l]);
    add_inplace(bias_grads[l], other.bias_grads[l]);
  }
}

void ParamGrads::scale(double factor) {
  for (auto& w : weight_grads) scale_inplace(w, factor);
  for (auto& b : bias_grads) scale_inplace(b, factor);
}

namespace {

void apply_activation(DenseMatrix& m, Activation act) {
  switch (act) {
    case Activation::kRelu:
      for (double& v : m.data) v = v > 0.0 ? v : 0.0;
      break;
    case Activation::kSigmoid:
      for (double& v : m.data) v = 1.0 / (1.0 + std::exp(-v));
      break;
    case Activation::kIdentity:
      break;
  }
}

// delta is the gradient w.r.t. the activated output; converts it in place to
// the gradient w.r.t. the pre-activation.
void apply_activation_grad(DenseMatrix& delta, const DenseMatrix& pre,
                           const DenseMatrix& post, Activation act) {
  switch (act) {
    case Activation::kRelu:
      for (std::size_t i = 0; i < delta.data.size(); ++i) {
        if (pre.data[i] <= 0.0) delta.data[i] = 0.0;
      }
      break;
    case Activation::kSigmoid:
      for (std::size_t i = 0; i < delta.data.size(); ++i) {
        delta.data[i] *= post.data[i] * (1.0 - post.data[i]);
      }
      break;
    case Activation::kIdentity:
      break;
  }
}

}  // namespace

MlpCache forward(const Mlp& net, const DenseMatrix& input) {
  if (input.cols != net.input_dim()) {
    throw ShapeError("forward: " + net.name + " expects input width " +
                     std::to_string(net.input_dim()) + ", got " +
                     std::to_string(input.cols));
  }
  MlpCache cache;
  cache.owner = net.name;
  cache.version = net.version;
  cache.input = input;
  const DenseMatrix* current = &cache.input;
  const std::size_t last = net.num_layers() - 1;
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    DenseMatrix z = matmul(*current, net.weights[l]);
    add_row_inplace(z, net.biases[l]);
    cache.pre.push_back(z);
    if (l != last) apply_activation(z, net.activation);
    cache.post.push_back(std::move(z));
    current = &cache.post.back();
  }
  return cache;
}

BackwardResult backward(const Mlp& net, const MlpCache& cache,
                        const DenseMatrix& output_grad) {
  if (cache.owner != net.name || cache.version != net.version ||
      cache.pre.size() != net.num_layers()) {
    throw CacheError("backward: cache does not match network " + net.name);
  }
  if (!output_grad.same_shape(cache.output())) {
    throw ShapeError("backward: output_grad shape mismatch for " + net.name);
  }
  BackwardResult result;
  result.grads.owner = net.name;
  result.grads.weight_grads.resize(net.num_layers());
  result.grads.bias_grads.resize(net.num_layers());

  DenseMatrix delta = output_grad;  // grad w.r.t. post[l]; last layer is linear
  for (std::size_t l = net.num_layers(); l-- > 0;) {
    if (l != net.num_layers() - 1) {
      apply_activation_grad(delta, cache.pre[l], cache.post[l], net.activation);
    }
    const DenseMatrix& prev = (l == 0) ? cache.input : cache.post[l - 1];
    result.grads.weight_grads[l] = matmul_at_b(prev, delta);
    result.grads.bias_grads[l] = column_sums(delta);
    delta = matmul_a_bt(delta, net.weights[l]);
  }
  result.input_grad = std::move(delta);
  return result;
}

ParamGrads finite_diff_grad(Mlp& net, const DenseMatrix& input,
                            const std::function<double(const DenseMatrix&)>& loss,
                            double h) {
  if (h <= 0.0) throw NumericError("finite_diff_grad: h must be positive");
  ParamGrads grads = ParamGrads::zeros_like(net);
  auto probe = [&](double& param, double& slot) {
    const double saved = param;
    param = saved + h;
    const double up = loss(forward(net, input).output());
    param = saved - h;
    const double down = loss(forward(net, input).output());
    param = saved;
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw NumericError("finite_diff_grad: non-finite loss");
    }
    slot = (up - down) / (2.0 * h);
  };
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    for (std::size_t i = 0; i < net.weights[l].data.size(); ++i) {
      probe(net.weights[l].data[i], grads.weight_grads[l].data[i]);
    }
    for (std::size_t i = 0; i < net.biases[l].data.size(); ++i) {
      probe(net.biases[l].data[i], grads.bias_grads[l].data[i]);
    }
  }
  return grads;
}

}  // namespace drgrad
