#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "drgrad/embedding.hpp"
#include "drgrad/matrix.hpp"
#include "drgrad/mlp.hpp"
#include "drgrad/optimizer.hpp"

namespace drgrad {

enum class ModelMode {
  kMmoe,
  kSplitMmoe,
  kSplitMmoeRouter,
  kDrgradNoPpnet,
  kDrgrad,
  kPcgradMmoe,
};

ModelMode mode_from_string(const std::string& name);
std::string to_string(ModelMode mode);

// Which subsystems a mode activates.
bool mode_has_split(ModelMode mode);    // three towers, dedicated v1 head
bool mode_has_router(ModelMode mode);   // routed tower updates
bool mode_has_updater(ModelMode mode);  // live mu aggregation weights
bool mode_has_ppnet(ModelMode mode);    // personalized gate on v_s
bool mode_is_pcgrad(ModelMode mode);    // projection baseline update rule

struct ModelConfig {
  std::size_t num_experts = 4;
  std::vector<std::size_t> expert_dims = {64, 32};
  std::vector<std::size_t> tower_dims = {32, 16, 1};  // identical for all towers
  std::size_t embedding_dim = 8;
  std::size_t embedding_buckets = 1000;
  ModelMode mode = ModelMode::kMmoe;
  double gamma = 1.0;          // scale-ratio exponent, > 0
  double rho = 0.99;           // updater decay, (0, 1]
  bool freeze_updater = false;  // pin mu at 0.5 for ablation comparisons
  std::vector<double> task_weights = {1.0, 1.0};
  double learning_rate = 1e-3;
  OptimizerKind optimizer = OptimizerKind::kAdam;
  std::uint64_t seed = 1;

  void validate() const;
};

struct FeatureSchema {
  std::size_t dense_count = 0;
  std::size_t sparse_count = 0;
  bool has_user_id = false;
  // Per-column vocabulary sizes; empty means embedding_buckets for all.
  std::vector<std::size_t> sparse_vocab;
};

// One minibatch in model-ready form.
struct Batch {
  DenseMatrix dense;                              // B x dense_count
  std::vector<std::vector<std::int64_t>> sparse;  // [column][B]
  std::vector<std::int64_t> user_ids;             // B, or empty
  std::vector<double> label1;
  std::vector<double> label2;

  std::size_t size() const { return dense.rows; }
};

// All activations needed to run the chain rule back through the graph.
struct ForwardCache {
  DenseMatrix h0;
  std::vector<MlpCache> experts;
  MlpCache gate1_cache, gate_s_cache;
  DenseMatrix w1, ws;        // softmax gate weights, B x E
  DenseMatrix v1, vs_mix;    // expert mixtures, B x M
  DenseMatrix user_emb;      // B x embedding_dim (ppnet only)
  MlpCache ppnet_cache;      // ppnet only
  DenseMatrix gp_sig;        // sigmoid(ppnet pre-activation), ppnet only
  DenseMatrix vs;            // gated (or plain) shared vector
  MlpCache t1p, t1pp, t2;    // t1pp only in split modes
  DenseMatrix task1_logits, task2_logits;
  double mu_p = 0.5, mu_pp = 0.5;
};

struct ModelGrads {
  std::vector<ParamGrads> experts;
  ParamGrads gate1, gate_s;
  ParamGrads t1p, t1pp, t2;
  ParamGrads ppnet;
  std::vector<DenseMatrix> embeddings;  // per sparse column, vocab x dim
  DenseMatrix user_embedding;
};

// MMoE / Split-MMoE / DRGrad graph: embeddings -> expert bank -> two gates
// (G1 -> v1, Gs -> v_s) -> towers. In split modes task 1 owns two towers
// (T1p on v1, T1pp on v_s) aggregated with the updater weights; in plain
// modes T1 reads v1 and T2 reads v_s.
struct Model {
  ModelConfig cfg;
  FeatureSchema schema;
  bool split = false;
  bool use_ppnet = false;

  std::vector<Mlp> experts;
  Mlp gate1, gate_s;
  std::vector<EmbeddingTable> embeddings;
  std::optional<EmbeddingTable> user_embedding;
  std::optional<Mlp> ppnet;
  Mlp t1p, t1pp, t2;  // t1pp only initialized in split modes

  static Model build(const ModelConfig& config, const FeatureSchema& schema);

  std::size_t input_dim() const {
    return schema.dense_count + schema.sparse_count * cfg.embedding_dim;
  }
  std::size_t mixture_dim() const { return cfg.expert_dims.back(); }
  std::size_t num_towers() const { return split ? 3 : 2; }
  std::size_t param_count() const;

  ForwardCache forward_pass(const Batch& batch, double mu_p = 0.5,
                            double mu_pp = 0.5) const;
  ModelGrads backward_pass(const ForwardCache& cache, const Batch& batch,
                           const DenseMatrix& task1_logit_grad,
                           const DenseMatrix& task2_logit_grad) const;

  std::vector<std::pair<std::string, DenseMatrix*>> named_params();
  std::vector<std::pair<std::string, const DenseMatrix*>> named_params() const;
};

// softmax per row.
DenseMatrix softmax_rows(const DenseMatrix& logits);

// Expert mixture: sum_k softmax(logits)[., k] * expert_k. One logit column
// per expert; all experts share a shape.
DenseMatrix mixture(const DenseMatrix& gate_logits,
                    const std::vector<const DenseMatrix*>& expert_outputs);

// Personalized gate: v_s <- v_s (x) 2 * sigmoid(gate_net(v_ppnet)).
// Gating factors lie strictly inside (0, 2) for finite pre-activations.
DenseMatrix ppnet_gate(const DenseMatrix& vs, const DenseMatrix& v_ppnet,
                       const Mlp& gate_net);

// Weighted sum of the two primary-task tower outputs (on logits).
DenseMatrix aggregate_task1(const DenseMatrix& t1p_logits, const DenseMatrix& t1pp_logits,
                            double mu_p, double mu_pp);

struct LossResult {
  double total = 0.0;
  std::vector<double> per_task;
};

// Mean binary cross-entropy per task on sigmoid(logits); total is the
// alpha-weighted sum.
LossResult compute_loss(const std::vector<const DenseMatrix*>& task_logits,
                        const std::vector<const std::vector<double>*>& labels,
                        const std::vector<double>& alpha);

// d(total loss)/d(logits) for one task, including the alpha weight and the
// 1/batch factor.
DenseMatrix bce_logit_grad(const DenseMatrix& logits, const std::vector<double>& labels,
                           double alpha);

}  // namespace drgrad
