#include "doctest.h"

#include <cmath>
#include <vector>

#include "drgrad/error.hpp"
#include "drgrad/model.hpp"
#include "drgrad/rng.hpp"

using namespace drgrad;

namespace {

ModelConfig small_config(ModelMode mode) {
  ModelConfig cfg;
  cfg.num_experts = 2;
  cfg.expert_dims = {6, 4};
  cfg.tower_dims = {4, 1};
  cfg.embedding_dim = 3;
  cfg.embedding_buckets = 11;
  cfg.mode = mode;
  cfg.seed = 42;
  return cfg;
}

FeatureSchema small_schema(bool user_id = false) {
  FeatureSchema schema;
  schema.dense_count = 3;
  schema.sparse_count = 2;
  schema.has_user_id = user_id;
  return schema;
}

Batch small_batch(std::size_t n, bool user_id = false, std::uint64_t seed = 5) {
  SeededRng rng(seed, "batch");
  Batch batch;
  batch.dense = DenseMatrix(n, 3);
  for (double& v : batch.dense.data) v = rng.normal(0.0, 1.0);
  batch.sparse.resize(2);
  for (auto& col : batch.sparse) {
    for (std::size_t i = 0; i < n; ++i) col.push_back(rng.randint(0, 1000));
  }
  if (user_id) {
    for (std::size_t i = 0; i < n; ++i) batch.user_ids.push_back(rng.randint(0, 999));
  }
  for (std::size_t i = 0; i < n; ++i) {
    batch.label1.push_back(static_cast<double>(rng.randint(0, 1)));
    batch.label2.push_back(static_cast<double>(rng.randint(0, 1)));
  }
  return batch;
}

double model_loss(const Model& model, const Batch& batch) {
  const ForwardCache cache = model.forward_pass(batch, 0.5, 0.5);
  return compute_loss({&cache.task1_logits, &cache.task2_logits},
                      {&batch.label1, &batch.label2}, model.cfg.task_weights)
      .total;
}

}  // namespace

TEST_SUITE_BEGIN("model");

TEST_CASE("build: mmoe has two gates and two towers") {
  const Model model = Model::build(small_config(ModelMode::kMmoe), small_schema());
  CHECK(model.num_towers() == 2);
  CHECK_FALSE(model.split);
  CHECK(model.t1p.name == "T1");
  CHECK(model.t2.name == "T2");
  CHECK(model.gate1.name == "G1");
  CHECK(model.gate_s.name == "Gs");
  CHECK_FALSE(model.ppnet.has_value());
}

TEST_CASE("build: drgrad exposes three towers and the personalized gate") {
  const Model model = Model::build(small_config(ModelMode::kDrgrad), small_schema(true));
  CHECK(model.num_towers() == 3);
  CHECK(model.t1p.name == "T1p");
  CHECK(model.t1pp.name == "T1pp");
  CHECK(model.t2.name == "T2");
  CHECK(model.ppnet.has_value());
  CHECK(model.user_embedding.has_value());
  // identical tower shapes
  CHECK(model.t1p.layer_dims == model.t1pp.layer_dims);
  CHECK(model.t1p.layer_dims == model.t2.layer_dims);
}

TEST_CASE("build: ppnet mode without a user id column is rejected") {
  CHECK_THROWS_AS(Model::build(small_config(ModelMode::kDrgrad), small_schema(false)),
                  ConfigError);
}

TEST_CASE("build: parameter count matches the closed form") {
  const Model model = Model::build(small_config(ModelMode::kSplitMmoe), small_schema());
  const std::size_t in = 3 + 2 * 3;  // dense + embedded sparse
  const std::size_t expert = in * 6 + 6 + 6 * 4 + 4;
  const std::size_t gate = in * 2 + 2;
  const std::size_t tower = 4 * 4 + 4 + 4 * 1 + 1;
  const std::size_t emb = 11 * 3;
  CHECK(model.param_count() == 2 * expert + 2 * gate + 3 * tower + 2 * emb);
}

TEST_CASE("mixture: symmetry, saturation, hand-computed softmax") {
  const DenseMatrix e1(1, 2, {1, 0});
  const DenseMatrix e2(1, 2, {0, 1});
  const DenseMatrix equal_logits(1, 2, {3.0, 3.0});
  const DenseMatrix mixed = mixture(equal_logits, {&e1, &e2});
  CHECK(mixed(0, 0) == doctest::Approx(0.5));
  CHECK(mixed(0, 1) == doctest::Approx(0.5));

  const DenseMatrix dominant(1, 2, {50.0, 0.0});
  const DenseMatrix saturated = mixture(dominant, {&e1, &e2});
  CHECK(saturated(0, 0) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(saturated(0, 1) == doctest::Approx(0.0).epsilon(1e-9));

  const DenseMatrix a(1, 1, {1});
  const DenseMatrix b(1, 1, {5});
  const DenseMatrix logits(1, 2, {std::log(3.0), 0.0});
  const DenseMatrix out = mixture(logits, {&a, &b});
  CHECK(out(0, 0) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("mixture: expert count mismatch raises shape error") {
  const DenseMatrix e1(1, 2, {1, 0});
  const DenseMatrix logits(1, 3, {0, 0, 0});
  CHECK_THROWS_AS(mixture(logits, {&e1}), ShapeError);
}

TEST_CASE("gate weights are a distribution per sample") {
  SeededRng rng(8, "softmax");
  DenseMatrix logits(32, 5);
  for (double& v : logits.data) v = rng.normal(0.0, 3.0);
  const DenseMatrix w = softmax_rows(logits);
  for (std::size_t i = 0; i < w.rows; ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < w.cols; ++j) {
      CHECK(w(i, j) >= 0.0);
      sum += w(i, j);
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("ppnet gate: factor 1 at zero pre-activation, hand value at ln 3") {
  SeededRng rng(1, "pp");
  Mlp gate = Mlp::init("Gp", {2, 1}, Activation::kRelu, rng);
  gate.weights[0].fill(0.0);
  gate.biases[0].fill(0.0);
  const DenseMatrix vs(1, 1, {2.0});
  const DenseMatrix v_pp(1, 2, {0.3, -0.4});

  CHECK(ppnet_gate(vs, v_pp, gate)(0, 0) == doctest::Approx(2.0));  // sigmoid(0) = 1/2

  gate.biases[0](0, 0) = std::log(3.0);  // sigmoid = 3/4, factor 1.5
  CHECK(ppnet_gate(vs, v_pp, gate)(0, 0) == doctest::Approx(3.0).epsilon(1e-12));

  gate.biases[0](0, 0) = -50.0;
  CHECK(ppnet_gate(vs, v_pp, gate)(0, 0) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("ppnet gating factors stay inside (0, 2)") {
  SeededRng rng(12, "pp/prop");
  Mlp gate = Mlp::init("Gp", {3, 4}, Activation::kRelu, rng);
  DenseMatrix v_pp(16, 3);
  for (double& v : v_pp.data) v = rng.normal(0.0, 4.0);
  DenseMatrix vs(16, 4);
  vs.fill(1.0);
  const DenseMatrix gated = ppnet_gate(vs, v_pp, gate);
  for (double v : gated.data) {
    CHECK(v > 0.0);
    CHECK(v < 2.0);
  }
}

TEST_CASE("aggregate_task1: midpoint, degenerate weight, updater value") {
  const DenseMatrix t1p(1, 1, {2.0});
  const DenseMatrix t1pp(1, 1, {4.0});
  CHECK(aggregate_task1(t1p, t1pp, 0.5, 0.5)(0, 0) == doctest::Approx(3.0));
  CHECK(aggregate_task1(t1p, t1pp, 1.0, 0.0)(0, 0) == doctest::Approx(2.0));

  const DenseMatrix one(1, 1, {1.0});
  const DenseMatrix zero(1, 1, {0.0});
  CHECK(aggregate_task1(one, zero, 0.7311, 0.2689)(0, 0) == doctest::Approx(0.7311));
}

TEST_CASE("compute_loss: ln 2 at logit zero, weighting and masking") {
  const DenseMatrix z(1, 1, {0.0});
  const std::vector<double> y1 = {1.0};
  const LossResult single = compute_loss({&z}, {&y1}, {1.0});
  CHECK(single.per_task[0] == doctest::Approx(std::log(2.0)).epsilon(1e-12));

  // alpha-weighted total over two tasks
  const DenseMatrix za(2, 1, {5.0, 5.0});
  const DenseMatrix zb(2, 1, {-5.0, -5.0});
  const std::vector<double> ya = {1.0, 1.0};
  const std::vector<double> yb = {1.0, 1.0};
  const LossResult both = compute_loss({&za, &zb}, {&ya, &yb}, {1.0, 1.0});
  CHECK(both.total ==
        doctest::Approx(both.per_task[0] + both.per_task[1]).epsilon(1e-12));
  const LossResult masked = compute_loss({&za, &zb}, {&ya, &yb}, {2.0, 0.0});
  CHECK(masked.total == doctest::Approx(2.0 * both.per_task[0]).epsilon(1e-12));

  const DenseMatrix bad(1, 1, {std::nan("")});
  CHECK_THROWS_AS(compute_loss({&bad}, {&y1}, {1.0}), NumericError);
}

TEST_CASE("mmoe forward ignores the aggregation weights") {
  const Model model = Model::build(small_config(ModelMode::kMmoe), small_schema());
  const Batch batch = small_batch(6);
  const ForwardCache a = model.forward_pass(batch, 0.5, 0.5);
  const ForwardCache b = model.forward_pass(batch, 0.9, 0.1);
  CHECK(a.task1_logits.data == b.task1_logits.data);
  CHECK(a.task2_logits.data == b.task2_logits.data);
}

TEST_CASE("split forward responds to the aggregation weights") {
  const Model model = Model::build(small_config(ModelMode::kSplitMmoe), small_schema());
  const Batch batch = small_batch(6);
  const ForwardCache a = model.forward_pass(batch, 0.5, 0.5);
  const ForwardCache b = model.forward_pass(batch, 1.0, 0.0);
  CHECK(a.task1_logits.data != b.task1_logits.data);
  CHECK(a.task1_logits(0, 0) ==
        doctest::Approx(0.5 * a.t1p.output()(0, 0) + 0.5 * a.t1pp.output()(0, 0)));
}

TEST_CASE("full-graph gradients match central finite differences") {
  // Exercises every parameter group: embeddings, experts, gates, ppnet and
  // the three towers, through the aggregated loss.
  Model model = Model::build(small_config(ModelMode::kDrgrad), small_schema(true));
  const Batch batch = small_batch(4, true, 99);

  const ForwardCache cache = model.forward_pass(batch, 0.5, 0.5);
  const DenseMatrix d1 =
      bce_logit_grad(cache.task1_logits, batch.label1, model.cfg.task_weights[0]);
  const DenseMatrix d2 =
      bce_logit_grad(cache.task2_logits, batch.label2, model.cfg.task_weights[1]);
  const ModelGrads grads = model.backward_pass(cache, batch, d1, d2);

  // Analytic gradients by name.
  std::vector<std::pair<std::string, const DenseMatrix*>> analytic;
  auto add_net = [&analytic](const ParamGrads& g, const std::string& name) {
    for (std::size_t l = 0; l < g.weight_grads.size(); ++l) {
      analytic.emplace_back(name + "/w" + std::to_string(l), &g.weight_grads[l]);
      analytic.emplace_back(name + "/b" + std::to_string(l), &g.bias_grads[l]);
    }
  };
  for (std::size_t k = 0; k < grads.experts.size(); ++k) {
    add_net(grads.experts[k], "expert" + std::to_string(k));
  }
  add_net(grads.gate1, "G1");
  add_net(grads.gate_s, "Gs");
  for (std::size_t s = 0; s < grads.embeddings.size(); ++s) {
    analytic.emplace_back("emb" + std::to_string(s), &grads.embeddings[s]);
  }
  analytic.emplace_back("emb_user", &grads.user_embedding);
  add_net(grads.ppnet, "Gp");
  add_net(grads.t1p, "T1p");
  add_net(grads.t1pp, "T1pp");
  add_net(grads.t2, "T2");

  const double h = 1e-5;
  double worst = 0.0;
  for (auto& [name, param] : model.named_params()) {
    const DenseMatrix* grad = nullptr;
    for (const auto& [gname, gptr] : analytic) {
      if (gname == name) {
        grad = gptr;
        break;
      }
    }
    REQUIRE_MESSAGE(grad != nullptr, name);
    for (std::size_t i = 0; i < param->data.size(); ++i) {
      const double saved = param->data[i];
      param->data[i] = saved + h;
      const double up = model_loss(model, batch);
      param->data[i] = saved - h;
      const double down = model_loss(model, batch);
      param->data[i] = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double a = grad->data[i];
      worst = std::max(worst,
                       std::abs(a - numeric) /
                           std::max({std::abs(a), std::abs(numeric), 1e-6}));
    }
  }
  CHECK(worst < 1e-4);
}

TEST_SUITE_END();
