#include "drgrad/model.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "drgrad/error.hpp"

namespace drgrad {

ModelMode mode_from_string(const std::string& name) {
  if (name == "mmoe") return ModelMode::kMmoe;
  if (name == "split_mmoe") return ModelMode::kSplitMmoe;
  if (name == "split_mmoe_router") return ModelMode::kSplitMmoeRouter;
  if (name == "drgrad_no_ppnet") return ModelMode::kDrgradNoPpnet;
  if (name == "drgrad") return ModelMode::kDrgrad;
  if (name == "pcgrad_mmoe") return ModelMode::kPcgradMmoe;
  throw ConfigError("unknown mode: " + name);
}

std::string to_string(ModelMode mode) {
  switch (mode) {
    case ModelMode::kMmoe: return "mmoe";
    case ModelMode::kSplitMmoe: return "split_mmoe";
    case ModelMode::kSplitMmoeRouter: return "split_mmoe_router";
    case ModelMode::kDrgradNoPpnet: return "drgrad_no_ppnet";
    case ModelMode::kDrgrad: return "drgrad";
    case ModelMode::kPcgradMmoe: return "pcgrad_mmoe";
  }
  return "mmoe";
}

bool mode_has_split(ModelMode mode) {
  return mode == ModelMode::kSplitMmoe || mode == ModelMode::kSplitMmoeRouter ||
         mode == ModelMode::kDrgradNoPpnet || mode == ModelMode::kDrgrad;
}

bool mode_has_router(ModelMode mode) {
  return mode == ModelMode::kSplitMmoeRouter || mode == ModelMode::kDrgradNoPpnet ||
         mode == ModelMode::kDrgrad;
}

bool mode_has_updater(ModelMode mode) {
  return mode == ModelMode::kDrgradNoPpnet || mode == ModelMode::kDrgrad;
}

bool mode_has_ppnet(ModelMode mode) { return mode == ModelMode::kDrgrad; }

bool mode_is_pcgrad(ModelMode mode) { return mode == ModelMode::kPcgradMmoe; }

void ModelConfig::validate() const {
  if (num_experts == 0) throw ConfigError("num_experts must be positive");
  if (expert_dims.empty()) throw ConfigError("expert_dims must be non-empty");
  if (tower_dims.empty()) throw ConfigError("tower_dims must be non-empty");
  if (tower_dims.back() != 1) throw ConfigError("towers must emit a single logit");
  if (embedding_dim == 0) throw ConfigError("embedding_dim must be positive");
  if (embedding_buckets == 0) throw ConfigError("embedding_buckets must be positive");
  if (gamma <= 0.0) throw ConfigError("gamma must be positive");
  if (rho <= 0.0 || rho > 1.0) throw ConfigError("rho must be in (0, 1]");
  if (task_weights.size() != 2) throw ConfigError("expected two task weights");
  for (double w : task_weights) {
    if (w < 0.0) throw ConfigError("task weights must be non-negative");
  }
  if (learning_rate <= 0.0) throw ConfigError("learning_rate must be positive");
}

Model Model::build(const ModelConfig& config, const FeatureSchema& schema) {
  config.validate();
  if (schema.dense_count == 0 && schema.sparse_count == 0) {
    throw ConfigError("feature schema has no columns");
  }
  if (!schema.sparse_vocab.empty() && schema.sparse_vocab.size() != schema.sparse_count) {
    throw ConfigError("sparse_vocab must list every sparse column");
  }
  if (mode_has_ppnet(config.mode) && !schema.has_user_id) {
    throw ConfigError("mode " + to_string(config.mode) +
                      " requires a personalized (user id) feature column");
  }

  Model model;
  model.cfg = config;
  model.schema = schema;
  model.split = mode_has_split(config.mode);
  model.use_ppnet = mode_has_ppnet(config.mode);

  const std::size_t in_dim = model.input_dim();
  const std::size_t mix_dim = config.expert_dims.back();

  std::vector<std::size_t> expert_dims;
  expert_dims.push_back(in_dim);
  expert_dims.insert(expert_dims.end(), config.expert_dims.begin(),
                     config.expert_dims.end());
  std::vector<std::size_t> tower_dims;
  tower_dims.push_back(mix_dim);
  tower_dims.insert(tower_dims.end(), config.tower_dims.begin(),
                    config.tower_dims.end());

  for (std::size_t k = 0; k < config.num_experts; ++k) {
    SeededRng rng(config.seed, "init/expert" + std::to_string(k));
    model.experts.push_back(
        Mlp::init("expert" + std::to_string(k), expert_dims, Activation::kRelu, rng));
  }
  {
    SeededRng rng(config.seed, "init/G1");
    model.gate1 = Mlp::init("G1", {in_dim, config.num_experts}, Activation::kRelu, rng);
  }
  {
    SeededRng rng(config.seed, "init/Gs");
    model.gate_s = Mlp::init("Gs", {in_dim, config.num_experts}, Activation::kRelu, rng);
  }
  for (std::size_t s = 0; s < schema.sparse_count; ++s) {
    const std::size_t vocab =
        schema.sparse_vocab.empty() ? config.embedding_buckets : schema.sparse_vocab[s];
    SeededRng rng(config.seed, "init/emb" + std::to_string(s));
    model.embeddings.push_back(
        EmbeddingTable::init("emb" + std::to_string(s), vocab, config.embedding_dim, rng));
  }
  if (model.use_ppnet) {
    SeededRng emb_rng(config.seed, "init/emb_user");
    model.user_embedding = EmbeddingTable::init("emb_user", config.embedding_buckets,
                                                config.embedding_dim, emb_rng);
    SeededRng pp_rng(config.seed, "init/Gp");
    model.ppnet =
        Mlp::init("Gp", {config.embedding_dim, mix_dim}, Activation::kRelu, pp_rng);
  }
  {
    SeededRng rng(config.seed, model.split ? "init/T1p" : "init/T1");
    model.t1p =
        Mlp::init(model.split ? "T1p" : "T1", tower_dims, Activation::kRelu, rng);
  }
  if (model.split) {
    SeededRng rng(config.seed, "init/T1pp");
    model.t1pp = Mlp::init("T1pp", tower_dims, Activation::kRelu, rng);
  }
  {
    SeededRng rng(config.seed, "init/T2");
    model.t2 = Mlp::init("T2", tower_dims, Activation::kRelu, rng);
  }
  return model;
}

std::size_t Model::param_count() const {
  std::size_t n = 0;
  for (const auto& e : experts) n += e.param_count();
  n += gate1.param_count() + gate_s.param_count();
  for (const auto& t : embeddings) n += t.rows.size();
  if (user_embedding) n += user_embedding->rows.size();
  if (ppnet) n += ppnet->param_count();
  n += t1p.param_count() + t2.param_count();
  if (split) n += t1pp.param_count();
  return n;
}

DenseMatrix softmax_rows(const DenseMatrix& logits) {
  DenseMatrix out(logits.rows, logits.cols);
  for (std::size_t i = 0; i < logits.rows; ++i) {
    const double* row = &logits.data[i * logits.cols];
    double peak = row[0];
    for (std::size_t j = 1; j < logits.cols; ++j) peak = std::max(peak, row[j]);
    double sum = 0.0;
    double* orow = &out.data[i * out.cols];
    for (std::size_t j = 0; j < logits.cols; ++j) {
      orow[j] = std::exp(row[j] - peak);
      sum += orow[j];
    }
    for (std::size_t j = 0; j < logits.cols; ++j) orow[j] /= sum;
  }
  return out;
}

namespace {

DenseMatrix mix_weighted(const DenseMatrix& weights,
                         const std::vector<const DenseMatrix*>& experts) {
  DenseMatrix out(experts[0]->rows, experts[0]->cols);
  for (std::size_t k = 0; k < experts.size(); ++k) {
    const DenseMatrix& e = *experts[k];
    for (std::size_t i = 0; i < out.rows; ++i) {
      const double w = weights(i, k);
      const double* erow = &e.data[i * e.cols];
      double* orow = &out.data[i * out.cols];
      for (std::size_t j = 0; j < out.cols; ++j) orow[j] += w * erow[j];
    }
  }
  return out;
}

// Backward of v = sum_k w[.,k] e_k. Accumulates into dexperts and returns the
// gradient w.r.t. the gate logits.
DenseMatrix mixture_backward(const DenseMatrix& weights,
                             const std::vector<const DenseMatrix*>& experts,
                             const DenseMatrix& dv,
                             std::vector<DenseMatrix>& dexperts) {
  const std::size_t batch = dv.rows;
  const std::size_t num_experts = experts.size();
  DenseMatrix dw(batch, num_experts);
  for (std::size_t k = 0; k < num_experts; ++k) {
    const DenseMatrix& e = *experts[k];
    DenseMatrix& de = dexperts[k];
    for (std::size_t i = 0; i < batch; ++i) {
      const double w = weights(i, k);
      const double* dvrow = &dv.data[i * dv.cols];
      const double* erow = &e.data[i * e.cols];
      double* derow = &de.data[i * de.cols];
      double dot = 0.0;
      for (std::size_t j = 0; j < dv.cols; ++j) {
        derow[j] += w * dvrow[j];
        dot += erow[j] * dvrow[j];
      }
      dw(i, k) = dot;
    }
  }
  // softmax jacobian: dlogits = w (x) (dw - <w, dw>)
  DenseMatrix dlogits(batch, num_experts);
  for (std::size_t i = 0; i < batch; ++i) {
    double inner = 0.0;
    for (std::size_t k = 0; k < num_experts; ++k) inner += weights(i, k) * dw(i, k);
    for (std::size_t k = 0; k < num_experts; ++k) {
      dlogits(i, k) = weights(i, k) * (dw(i, k) - inner);
    }
  }
  return dlogits;
}

DenseMatrix sigmoid_of(const DenseMatrix& m) {
  DenseMatrix out(m.rows, m.cols);
  for (std::size_t i = 0; i < m.data.size(); ++i) {
    out.data[i] = 1.0 / (1.0 + std::exp(-m.data[i]));
  }
  return out;
}

}  // namespace

DenseMatrix mixture(const DenseMatrix& gate_logits,
                    const std::vector<const DenseMatrix*>& expert_outputs) {
  if (expert_outputs.empty()) throw ShapeError("mixture: no experts");
  if (gate_logits.cols != expert_outputs.size()) {
    throw ShapeError("mixture: one gate logit column per expert required");
  }
  for (const DenseMatrix* e : expert_outputs) {
    if (e->rows != gate_logits.rows || !e->same_shape(*expert_outputs[0])) {
      throw ShapeError("mixture: expert output shape mismatch");
    }
  }
  return mix_weighted(softmax_rows(gate_logits), expert_outputs);
}

DenseMatrix ppnet_gate(const DenseMatrix& vs, const DenseMatrix& v_ppnet,
                       const Mlp& gate_net) {
  if (gate_net.output_dim() != vs.cols) {
    throw ConfigError("ppnet_gate: gate output width must match v_s");
  }
  const DenseMatrix sig = sigmoid_of(forward(gate_net, v_ppnet).output());
  DenseMatrix out(vs.rows, vs.cols);
  for (std::size_t i = 0; i < vs.data.size(); ++i) {
    out.data[i] = vs.data[i] * 2.0 * sig.data[i];
  }
  return out;
}

DenseMatrix aggregate_task1(const DenseMatrix& t1p_logits, const DenseMatrix& t1pp_logits,
                            double mu_p, double mu_pp) {
  if (!t1p_logits.same_shape(t1pp_logits)) {
    throw ShapeError("aggregate_task1: tower output shapes differ");
  }
  DenseMatrix out(t1p_logits.rows, t1p_logits.cols);
  for (std::size_t i = 0; i < out.data.size(); ++i) {
    out.data[i] = mu_p * t1p_logits.data[i] + mu_pp * t1pp_logits.data[i];
  }
  return out;
}

LossResult compute_loss(const std::vector<const DenseMatrix*>& task_logits,
                        const std::vector<const std::vector<double>*>& labels,
                        const std::vector<double>& alpha) {
  if (task_logits.size() != labels.size() || task_logits.size() != alpha.size()) {
    throw ShapeError("compute_loss: task count mismatch");
  }
  LossResult result;
  for (std::size_t t = 0; t < task_logits.size(); ++t) {
    const DenseMatrix& z = *task_logits[t];
    const std::vector<double>& y = *labels[t];
    if (z.cols != 1 || z.rows != y.size()) {
      throw ShapeError("compute_loss: logit/label shape mismatch");
    }
    if (!z.all_finite()) throw NumericError("compute_loss: non-finite logits");
    double sum = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      if (y[i] != 0.0 && y[i] != 1.0) {
        throw NumericError("compute_loss: labels must be 0 or 1");
      }
      // stable BCE on logits: max(z,0) - y*z + log(1 + exp(-|z|))
      const double zi = z.data[i];
      sum += std::max(zi, 0.0) - y[i] * zi + std::log1p(std::exp(-std::abs(zi)));
    }
    const double mean = sum / static_cast<double>(y.size());
    result.per_task.push_back(mean);
    result.total += alpha[t] * mean;
  }
  return result;
}

DenseMatrix bce_logit_grad(const DenseMatrix& logits, const std::vector<double>& labels,
                           double alpha) {
  if (logits.cols != 1 || logits.rows != labels.size()) {
    throw ShapeError("bce_logit_grad: logit/label shape mismatch");
  }
  DenseMatrix grad(logits.rows, 1);
  const double scale = alpha / static_cast<double>(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double p = 1.0 / (1.0 + std::exp(-logits.data[i]));
    grad.data[i] = scale * (p - labels[i]);
  }
  return grad;
}

ForwardCache Model::forward_pass(const Batch& batch, double mu_p, double mu_pp) const {
  if (batch.dense.cols != schema.dense_count) {
    throw ShapeError("forward_pass: dense column count mismatch");
  }
  if (batch.sparse.size() != schema.sparse_count) {
    throw ShapeError("forward_pass: sparse column count mismatch");
  }
  const std::size_t b = batch.size();
  if (use_ppnet && batch.user_ids.size() != b) {
    throw ConfigError("forward_pass: personalized gate needs user ids");
  }

  ForwardCache cache;
  cache.mu_p = mu_p;
  cache.mu_pp = mu_pp;

  // h0 = [dense | emb_0 | ... ]
  cache.h0 = DenseMatrix(b, input_dim());
  for (std::size_t i = 0; i < b; ++i) {
    for (std::size_t j = 0; j < schema.dense_count; ++j) {
      cache.h0(i, j) = batch.dense(i, j);
    }
  }
  std::size_t offset = schema.dense_count;
  for (std::size_t s = 0; s < schema.sparse_count; ++s) {
    if (batch.sparse[s].size() != b) {
      throw ShapeError("forward_pass: sparse column length mismatch");
    }
    const DenseMatrix emb = embeddings[s].lookup(batch.sparse[s]);
    for (std::size_t i = 0; i < b; ++i) {
      for (std::size_t j = 0; j < cfg.embedding_dim; ++j) {
        cache.h0(i, offset + j) = emb(i, j);
      }
    }
    offset += cfg.embedding_dim;
  }

  std::vector<const DenseMatrix*> expert_outs;
  for (const Mlp& e : experts) {
    cache.experts.push_back(forward(e, cache.h0));
    expert_outs.push_back(&cache.experts.back().output());
  }
  cache.gate1_cache = forward(gate1, cache.h0);
  cache.gate_s_cache = forward(gate_s, cache.h0);
  cache.w1 = softmax_rows(cache.gate1_cache.output());
  cache.ws = softmax_rows(cache.gate_s_cache.output());
  cache.v1 = mix_weighted(cache.w1, expert_outs);
  cache.vs_mix = mix_weighted(cache.ws, expert_outs);

  if (use_ppnet) {
    cache.user_emb = user_embedding->lookup(batch.user_ids);
    cache.ppnet_cache = forward(*ppnet, cache.user_emb);
    cache.gp_sig = sigmoid_of(cache.ppnet_cache.output());
    cache.vs = DenseMatrix(b, mixture_dim());
    for (std::size_t i = 0; i < cache.vs.data.size(); ++i) {
      cache.vs.data[i] = cache.vs_mix.data[i] * 2.0 * cache.gp_sig.data[i];
    }
  } else {
    cache.vs = cache.vs_mix;
  }

  cache.t1p = forward(t1p, cache.v1);
  if (split) {
    cache.t1pp = forward(t1pp, cache.vs);
    cache.task1_logits =
        aggregate_task1(cache.t1p.output(), cache.t1pp.output(), mu_p, mu_pp);
  } else {
    cache.task1_logits = cache.t1p.output();
  }
  cache.t2 = forward(t2, cache.vs);
  cache.task2_logits = cache.t2.output();
  return cache;
}

ModelGrads Model::backward_pass(const ForwardCache& cache, const Batch& batch,
                                const DenseMatrix& task1_logit_grad,
                                const DenseMatrix& task2_logit_grad) const {
  const std::size_t b = batch.size();
  ModelGrads grads;

  // Towers. In split modes the task-1 logit gradient fans into both heads
  // scaled by the aggregation weights.
  DenseMatrix dt1p = task1_logit_grad;
  if (split) scale_inplace(dt1p, cache.mu_p);
  BackwardResult t1p_bwd = backward(t1p, cache.t1p, dt1p);
  grads.t1p = std::move(t1p_bwd.grads);
  DenseMatrix dv1 = std::move(t1p_bwd.input_grad);

  DenseMatrix dvs(b, mixture_dim());
  if (split) {
    DenseMatrix dt1pp = task1_logit_grad;
    scale_inplace(dt1pp, cache.mu_pp);
    BackwardResult t1pp_bwd = backward(t1pp, cache.t1pp, dt1pp);
    grads.t1pp = std::move(t1pp_bwd.grads);
    add_inplace(dvs, t1pp_bwd.input_grad);
  }
  BackwardResult t2_bwd = backward(t2, cache.t2, task2_logit_grad);
  grads.t2 = std::move(t2_bwd.grads);
  add_inplace(dvs, t2_bwd.input_grad);

  // Personalized gate: vs = vs_mix (x) 2 sig. No stop-gradient on vs_mix.
  DenseMatrix dvs_mix(b, mixture_dim());
  if (use_ppnet) {
    DenseMatrix dpre(b, mixture_dim());
    for (std::size_t i = 0; i < dvs.data.size(); ++i) {
      const double sig = cache.gp_sig.data[i];
      dvs_mix.data[i] = dvs.data[i] * 2.0 * sig;
      dpre.data[i] = dvs.data[i] * cache.vs_mix.data[i] * 2.0 * sig * (1.0 - sig);
    }
    BackwardResult pp_bwd = backward(*ppnet, cache.ppnet_cache, dpre);
    grads.ppnet = std::move(pp_bwd.grads);
    grads.user_embedding =
        user_embedding->grad_from(batch.user_ids, pp_bwd.input_grad);
  } else {
    dvs_mix = dvs;
  }

  // Mixtures back to experts and gates.
  std::vector<const DenseMatrix*> expert_outs;
  for (const MlpCache& c : cache.experts) expert_outs.push_back(&c.output());
  std::vector<DenseMatrix> dexperts;
  for (std::size_t k = 0; k < experts.size(); ++k) {
    dexperts.emplace_back(b, mixture_dim());
  }
  const DenseMatrix dg1_logits = mixture_backward(cache.w1, expert_outs, dv1, dexperts);
  const DenseMatrix dgs_logits =
      mixture_backward(cache.ws, expert_outs, dvs_mix, dexperts);

  DenseMatrix dh0(b, input_dim());
  BackwardResult g1_bwd = backward(gate1, cache.gate1_cache, dg1_logits);
  grads.gate1 = std::move(g1_bwd.grads);
  add_inplace(dh0, g1_bwd.input_grad);
  BackwardResult gs_bwd = backward(gate_s, cache.gate_s_cache, dgs_logits);
  grads.gate_s = std::move(gs_bwd.grads);
  add_inplace(dh0, gs_bwd.input_grad);

  for (std::size_t k = 0; k < experts.size(); ++k) {
    BackwardResult e_bwd = backward(experts[k], cache.experts[k], dexperts[k]);
    grads.experts.push_back(std::move(e_bwd.grads));
    add_inplace(dh0, e_bwd.input_grad);
  }

  // Embedding gradients from the h0 slices.
  std::size_t offset = schema.dense_count;
  for (std::size_t s = 0; s < schema.sparse_count; ++s) {
    DenseMatrix slice(b, cfg.embedding_dim);
    for (std::size_t i = 0; i < b; ++i) {
      for (std::size_t j = 0; j < cfg.embedding_dim; ++j) {
        slice(i, j) = dh0(i, offset + j);
      }
    }
    grads.embeddings.push_back(embeddings[s].grad_from(batch.sparse[s], slice));
    offset += cfg.embedding_dim;
  }
  return grads;
}

std::vector<std::pair<std::string, DenseMatrix*>> Model::named_params() {
  std::vector<std::pair<std::string, DenseMatrix*>> out;
  auto add_net = [&out](Mlp& net) {
    for (std::size_t l = 0; l < net.num_layers(); ++l) {
      out.emplace_back(net.name + "/w" + std::to_string(l), &net.weights[l]);
      out.emplace_back(net.name + "/b" + std::to_string(l), &net.biases[l]);
    }
  };
  for (Mlp& e : experts) add_net(e);
  add_net(gate1);
  add_net(gate_s);
  for (EmbeddingTable& t : embeddings) out.emplace_back(t.name, &t.rows);
  if (user_embedding) out.emplace_back(user_embedding->name, &user_embedding->rows);
  if (ppnet) add_net(*ppnet);
  add_net(t1p);
  if (split) add_net(t1pp);
  add_net(t2);
  return out;
}

std::vector<std::pair<std::string, const DenseMatrix*>> Model::named_params() const {
  std::vector<std::pair<std::string, const DenseMatrix*>> out;
  for (const auto& [name, ptr] : const_cast<Model*>(this)->named_params()) {
    out.emplace_back(name, ptr);
  }
  return out;
}

}  // namespace drgrad
