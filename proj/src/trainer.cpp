#include "drgrad/trainer.hpp"

#include <cmath>
#include <exception>
#include <fstream>
#include <numeric>
#include <thread>
#include <utility>

#include "json.hpp"

#include "drgrad/error.hpp"
#include "drgrad/flatten.hpp"
#include "drgrad/pcgrad.hpp"
#include "drgrad/router.hpp"

namespace drgrad {

using nlohmann::json;

void to_json(json& j, const SyntheticSpec& spec) {
  j = json{{"n_total", spec.n_total},
           {"n_train", spec.n_train},
           {"n_features", spec.n_features},
           {"n_sparse", spec.n_sparse},
           {"cos_theta", spec.cos_theta},
           {"noise_mean", spec.noise_mean},
           {"noise_var", spec.noise_var},
           {"seed", spec.seed},
           {"user_id_column", spec.user_id_column}};
}

void from_json(const json& j, SyntheticSpec& spec) {
  spec = SyntheticSpec{};
  if (j.contains("n_total")) j.at("n_total").get_to(spec.n_total);
  if (j.contains("n_train")) j.at("n_train").get_to(spec.n_train);
  if (j.contains("n_features")) j.at("n_features").get_to(spec.n_features);
  if (j.contains("n_sparse")) j.at("n_sparse").get_to(spec.n_sparse);
  if (j.contains("cos_theta")) j.at("cos_theta").get_to(spec.cos_theta);
  if (j.contains("noise_mean")) j.at("noise_mean").get_to(spec.noise_mean);
  if (j.contains("noise_var")) j.at("noise_var").get_to(spec.noise_var);
  if (j.contains("seed")) j.at("seed").get_to(spec.seed);
  if (j.contains("user_id_column")) j.at("user_id_column").get_to(spec.user_id_column);
}

void to_json(json& j, const ModelConfig& cfg) {
  j = json{{"num_experts", cfg.num_experts},
           {"expert_dims", cfg.expert_dims},
           {"tower_dims", cfg.tower_dims},
           {"embedding_dim", cfg.embedding_dim},
           {"embedding_buckets", cfg.embedding_buckets},
           {"mode", to_string(cfg.mode)},
           {"gamma", cfg.gamma},
           {"rho", cfg.rho},
           {"freeze_updater", cfg.freeze_updater},
           {"task_weights", cfg.task_weights},
           {"learning_rate", cfg.learning_rate},
           {"optimizer", to_string(cfg.optimizer)},
           {"seed", cfg.seed}};
}

void from_json(const json& j, ModelConfig& cfg) {
  cfg = ModelConfig{};
  if (j.contains("num_experts")) j.at("num_experts").get_to(cfg.num_experts);
  if (j.contains("expert_dims")) j.at("expert_dims").get_to(cfg.expert_dims);
  if (j.contains("tower_dims")) j.at("tower_dims").get_to(cfg.tower_dims);
  if (j.contains("embedding_dim")) j.at("embedding_dim").get_to(cfg.embedding_dim);
  if (j.contains("embedding_buckets")) {
    j.at("embedding_buckets").get_to(cfg.embedding_buckets);
  }
  if (j.contains("mode")) cfg.mode = mode_from_string(j.at("mode").get<std::string>());
  if (j.contains("gamma")) j.at("gamma").get_to(cfg.gamma);
  if (j.contains("rho")) j.at("rho").get_to(cfg.rho);
  if (j.contains("freeze_updater")) j.at("freeze_updater").get_to(cfg.freeze_updater);
  if (j.contains("task_weights")) j.at("task_weights").get_to(cfg.task_weights);
  if (j.contains("learning_rate")) j.at("learning_rate").get_to(cfg.learning_rate);
  if (j.contains("optimizer")) {
    cfg.optimizer = optimizer_from_string(j.at("optimizer").get<std::string>());
  }
  if (j.contains("seed")) j.at("seed").get_to(cfg.seed);
}

void ExperimentConfig::validate() const {
  if (synthetic.has_value() == census_dir.has_value()) {
    throw ConfigError("experiment needs exactly one dataset source");
  }
  if (synthetic) synthetic->validate();
  if (seeds.empty()) throw ConfigError("experiment needs at least one seed");
  if (batch_size == 0) throw ConfigError("batch_size must be >= 1");
  if (eval_every == 0) throw ConfigError("eval_every must be >= 1");
  if (telemetry_stride == 0) throw ConfigError("telemetry_stride must be >= 1");
  model.validate();
}

std::string ExperimentConfig::dataset_tag() const {
  return synthetic ? "synthetic" : "census";
}

std::string experiment_to_json(const ExperimentConfig& config) {
  json j;
  if (config.synthetic) {
    j["dataset"]["synthetic"] = *config.synthetic;
  } else if (config.census_dir) {
    j["dataset"]["census"] = *config.census_dir;
  }
  j["model"] = config.model;
  j["epochs"] = config.epochs;
  j["batch_size"] = config.batch_size;
  j["eval_every"] = config.eval_every;
  j["telemetry_stride"] = config.telemetry_stride;
  j["out_dir"] = config.out_dir;
  j["seeds"] = config.seeds;
  return j.dump(2);
}

ExperimentConfig experiment_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  ExperimentConfig config;
  try {
    if (j.contains("dataset")) {
      const json& d = j.at("dataset");
      if (d.contains("synthetic")) config.synthetic = d.at("synthetic").get<SyntheticSpec>();
      if (d.contains("census")) config.census_dir = d.at("census").get<std::string>();
    }
    if (j.contains("model")) config.model = j.at("model").get<ModelConfig>();
    if (j.contains("epochs")) j.at("epochs").get_to(config.epochs);
    if (j.contains("batch_size")) j.at("batch_size").get_to(config.batch_size);
    if (j.contains("eval_every")) j.at("eval_every").get_to(config.eval_every);
    if (j.contains("telemetry_stride")) {
      j.at("telemetry_stride").get_to(config.telemetry_stride);
    }
    if (j.contains("out_dir")) j.at("out_dir").get_to(config.out_dir);
    if (j.contains("seeds")) j.at("seeds").get_to(config.seeds);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config field error: ") + e.what());
  }
  return config;
}

ExperimentConfig load_experiment_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return experiment_from_json(text);
}

DatasetPair load_dataset(const ExperimentConfig& config) {
  config.validate();
  if (config.synthetic) {
    auto [train, test] = gen_synthetic(*config.synthetic);
    return {std::move(train), std::move(test)};
  }
  auto [train, test] = load_census(std::filesystem::path(*config.census_dir));
  return {std::move(train), std::move(test)};
}

namespace {

// One optimizer state per parameter group.
struct OptimizerBank {
  std::vector<OptimizerState> experts;
  OptimizerState gate1, gate_s;
  OptimizerState t1p, t1pp, t2;
  OptimizerState ppnet;
  std::vector<OptimizerState> embeddings;
  OptimizerState user_embedding;

  static OptimizerBank make(const Model& model) {
    const auto fresh = [&model] {
      return OptimizerState::make(model.cfg.optimizer, model.cfg.learning_rate);
    };
    OptimizerBank bank;
    bank.experts.assign(model.experts.size(), fresh());
    bank.gate1 = fresh();
    bank.gate_s = fresh();
    bank.t1p = fresh();
    bank.t1pp = fresh();
    bank.t2 = fresh();
    bank.ppnet = fresh();
    bank.embeddings.assign(model.embeddings.size(), fresh());
    bank.user_embedding = fresh();
    return bank;
  }
};

void step_matrix(DenseMatrix& param, const DenseMatrix& grad, OptimizerState& state) {
  optimizer_step({&param}, {&grad}, state);
}

// Plain update of every non-tower group.
void update_shared_groups(Model& model, const ModelGrads& grads, OptimizerBank& bank) {
  for (std::size_t k = 0; k < model.experts.size(); ++k) {
    optimizer_step(model.experts[k], grads.experts[k], bank.experts[k]);
  }
  optimizer_step(model.gate1, grads.gate1, bank.gate1);
  optimizer_step(model.gate_s, grads.gate_s, bank.gate_s);
  for (std::size_t s = 0; s < model.embeddings.size(); ++s) {
    step_matrix(model.embeddings[s].rows, grads.embeddings[s], bank.embeddings[s]);
  }
  if (model.use_ppnet) {
    optimizer_step(*model.ppnet, grads.ppnet, bank.ppnet);
    step_matrix(model.user_embedding->rows, grads.user_embedding, bank.user_embedding);
  }
}

std::vector<double> add_vectors(const std::vector<double>& a,
                                const std::vector<double>& b) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

// Shared parameters under PCGrad: experts and embeddings, concatenated in a
// fixed order.
std::vector<double> pack_shared(const Model& model, const ModelGrads& grads) {
  std::vector<double> flat;
  for (std::size_t k = 0; k < model.experts.size(); ++k) {
    const std::vector<double> part = flatten(grads.experts[k]);
    flat.insert(flat.end(), part.begin(), part.end());
  }
  for (const DenseMatrix& emb : grads.embeddings) {
    flat.insert(flat.end(), emb.data.begin(), emb.data.end());
  }
  return flat;
}

void apply_shared(Model& model, const std::vector<double>& flat, OptimizerBank& bank) {
  std::size_t offset = 0;
  for (std::size_t k = 0; k < model.experts.size(); ++k) {
    const ParamLayout layout = layout_of(model.experts[k]);
    std::vector<double> part(flat.begin() + offset, flat.begin() + offset + layout.total());
    offset += layout.total();
    optimizer_step(model.experts[k], unflatten(part, layout), bank.experts[k]);
  }
  for (std::size_t s = 0; s < model.embeddings.size(); ++s) {
    DenseMatrix grad(model.embeddings[s].rows.rows, model.embeddings[s].rows.cols);
    std::copy(flat.begin() + offset, flat.begin() + offset + grad.size(),
              grad.data.begin());
    offset += grad.size();
    step_matrix(model.embeddings[s].rows, grad, bank.embeddings[s]);
  }
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

std::string eval_csv_header() {
  return "epoch,mode,seed,dataset,auc_task1,auc_task2,loss_task1,loss_task2\n";
}

std::string eval_csv_row(std::size_t epoch, const EvalReport& report) {
  std::string row = std::to_string(epoch) + "," + report.mode + "," +
                    std::to_string(report.seed) + "," + report.dataset + "," +
                    format_g17(report.auc_task1) + "," + format_g17(report.auc_task2) +
                    "," + format_g17(report.loss_task1) + "," +
                    format_g17(report.loss_task2) + "\n";
  return row;
}

}  // namespace

EvalReport evaluate_model(const Model& model, const UpdaterState& updater,
                          const LabeledDataset& dataset, std::size_t batch_size,
                          std::uint64_t seed, const std::string& dataset_tag) {
  const std::size_t n = dataset.size();
  if (n == 0) throw ConfigError("evaluate_model: empty dataset");
  DenseMatrix logits1(n, 1), logits2(n, 1);
  std::vector<std::size_t> indices(batch_size);
  for (std::size_t start = 0; start < n; start += batch_size) {
    const std::size_t end = std::min(n, start + batch_size);
    indices.resize(end - start);
    std::iota(indices.begin(), indices.end(), start);
    const Batch batch = gather(dataset, indices);
    const ForwardCache cache = model.forward_pass(batch, updater.mu_p, updater.mu_pp);
    for (std::size_t i = 0; i < indices.size(); ++i) {
      logits1.data[start + i] = cache.task1_logits.data[i];
      logits2.data[start + i] = cache.task2_logits.data[i];
    }
  }
  const LossResult loss = compute_loss({&logits1, &logits2},
                                       {&dataset.label1, &dataset.label2}, {1.0, 1.0});
  EvalReport report;
  report.mode = to_string(model.cfg.mode);
  report.seed = seed;
  report.dataset = dataset_tag;
  report.auc_task1 = auc(logits1.data, dataset.label1);
  report.auc_task2 = auc(logits2.data, dataset.label2);
  report.loss_task1 = loss.per_task[0];
  report.loss_task2 = loss.per_task[1];
  return report;
}

RunArtifacts train_single_seed(const ExperimentConfig& config, const DatasetPair& data,
                               std::uint64_t seed) {
  config.validate();
  const std::filesystem::path run_dir =
      std::filesystem::path(config.out_dir) / ("seed" + std::to_string(seed));
  std::filesystem::create_directories(run_dir);

  // Effective per-run config: this seed only, echoed into the run directory.
  ExperimentConfig effective = config;
  effective.seeds = {seed};
  effective.model.seed = seed;
  write_text_file(run_dir / "config.json", experiment_to_json(effective));

  Model model = Model::build(effective.model, data.train.feature_schema());
  OptimizerBank bank = OptimizerBank::make(model);
  UpdaterState updater;
  updater.rho = effective.model.rho;

  const ModelMode mode = effective.model.mode;
  const bool split = mode_has_split(mode);
  const bool routed = mode_has_router(mode);
  const bool live_updater = mode_has_updater(mode) && !effective.model.freeze_updater;
  const std::vector<double>& alpha = effective.model.task_weights;

  TelemetryWriter telemetry(run_dir / "telemetry.csv");
  std::ofstream eval_out(run_dir / "eval.csv");
  if (!eval_out) throw IoError("cannot write eval.csv in " + run_dir.string());
  eval_out << eval_csv_header();

  SeededRng pcgrad_rng(seed, "pcgrad/pairs");
  std::int64_t step = 0;
  EvalReport last_report;
  bool have_report = false;

  auto run_eval = [&](std::size_t epoch) {
    last_report = evaluate_model(model, updater, data.test, effective.batch_size, seed,
                                 effective.dataset_tag() + "/test");
    have_report = true;
    eval_out << eval_csv_row(epoch, last_report);
    eval_out.flush();
  };

  auto train_step = [&](const std::vector<std::size_t>& idx) {
      const Batch batch = gather(data.train, idx);
      const ForwardCache cache = model.forward_pass(batch, updater.mu_p, updater.mu_pp);
      const LossResult loss =
          compute_loss({&cache.task1_logits, &cache.task2_logits},
                       {&batch.label1, &batch.label2}, alpha);
      if (!std::isfinite(loss.total)) {
        throw NumericError("training diverged: non-finite loss");
      }
      const DenseMatrix d1 = bce_logit_grad(cache.task1_logits, batch.label1, alpha[0]);
      const DenseMatrix d2 = bce_logit_grad(cache.task2_logits, batch.label2, alpha[1]);

      RunRecord record;
      record.step = step;
      record.loss_task1 = loss.per_task[0];
      record.loss_task2 = loss.per_task[1];
      record.total_loss = loss.total;
      record.mu_p = updater.mu_p;
      record.mu_pp = updater.mu_pp;

      if (mode_is_pcgrad(mode)) {
        DenseMatrix zero1(d1.rows, 1), zero2(d2.rows, 1);
        const ModelGrads task1_grads = model.backward_pass(cache, batch, d1, zero2);
        const ModelGrads task2_grads = model.backward_pass(cache, batch, zero1, d2);
        const std::vector<double> shared1 = pack_shared(model, task1_grads);
        const std::vector<double> shared2 = pack_shared(model, task2_grads);

        GradientTriple triple;
        triple.g1p = flatten(task1_grads.t1p);
        triple.g1pp.assign(triple.g1p.size(), 0.0);
        triple.g2 = flatten(task2_grads.t2);
        triple.step = step;
        record.xi_b = cosine(triple.g1p, triple.g2);
        record.norm_g1p = l2_norm(triple.g1p);
        record.norm_g2 = l2_norm(triple.g2);

        const auto projected = pcgrad_project({shared1, shared2}, pcgrad_rng);
        apply_shared(model, add_vectors(projected[0], projected[1]), bank);
        // Task-owned groups keep their own task's gradient.
        optimizer_step(model.gate1, task1_grads.gate1, bank.gate1);
        optimizer_step(model.t1p, task1_grads.t1p, bank.t1p);
        optimizer_step(model.gate_s, task2_grads.gate_s, bank.gate_s);
        optimizer_step(model.t2, task2_grads.t2, bank.t2);
      } else {
        const ModelGrads grads = model.backward_pass(cache, batch, d1, d2);
        GradientTriple triple;
        triple.g1p = flatten(grads.t1p);
        triple.g2 = flatten(grads.t2);
        if (split) {
          triple.g1pp = flatten(grads.t1pp);
        } else {
          triple.g1pp.assign(triple.g1p.size(), 0.0);
        }
        triple.step = step;
        record.norm_g1p = l2_norm(triple.g1p);
        record.norm_g1pp = l2_norm(triple.g1pp);
        record.norm_g2 = l2_norm(triple.g2);
        record.xi_a = cosine(triple.g1p, triple.g1pp);
        record.xi_b = cosine(triple.g1p, triple.g2);
        record.lambda_a = scale_ratio(triple.g1p, triple.g1pp, effective.model.gamma);
        record.lambda_b = scale_ratio(triple.g1p, triple.g2, effective.model.gamma);

        if (routed) {
          const RouterOutput routed_out = route(triple, effective.model.gamma);
          record.norm_gr1p = l2_norm(routed_out.gr1p);
          record.norm_gr1pp = l2_norm(routed_out.gr1pp);

          const ParamLayout tower_layout = layout_of(model.t1p);
          optimizer_step(model.t1p,
                         unflatten(add_vectors(triple.g1p, routed_out.gr1p), tower_layout),
                         bank.t1p);
          optimizer_step(
              model.t1pp,
              unflatten(add_vectors(triple.g1pp, routed_out.gr1pp), layout_of(model.t1pp)),
              bank.t1pp);
          optimizer_step(model.t2, grads.t2, bank.t2);
          update_shared_groups(model, grads, bank);
          if (live_updater) {
            updater_step(updater, triple, routed_out);
            record.mu_p = updater.mu_p;
            record.mu_pp = updater.mu_pp;
          }
        } else {
          optimizer_step(model.t1p, grads.t1p, bank.t1p);
          if (split) optimizer_step(model.t1pp, grads.t1pp, bank.t1pp);
          optimizer_step(model.t2, grads.t2, bank.t2);
          update_shared_groups(model, grads, bank);
        }
      }

      if (step % static_cast<std::int64_t>(effective.telemetry_stride) == 0) {
        telemetry.append(record);
      }
  };

  for (std::size_t epoch = 0; epoch < effective.epochs; ++epoch) {
    SeededRng shuffle_rng(seed, "shuffle/epoch" + std::to_string(epoch));
    const auto batches =
        batch_indices(data.train.size(), effective.batch_size, shuffle_rng);
    for (const auto& idx : batches) {
      try {
        train_step(idx);
      } catch (const NumericError& e) {
        json diag{{"step", step}, {"error", e.what()}};
        write_text_file(run_dir / "diagnostic.json", diag.dump(2));
        throw NumericError("aborted at step " + std::to_string(step) + ": " + e.what() +
                           " (see " + (run_dir / "diagnostic.json").string() + ")");
      }
      ++step;
    }
    if ((epoch + 1) % effective.eval_every == 0 || epoch + 1 == effective.epochs) {
      run_eval(epoch + 1);
    }
  }
  if (!have_report) run_eval(0);  // untrained model (epochs == 0)

  telemetry.flush();
  save_checkpoint(run_dir / "checkpoint.json", model, updater, step);

  RunArtifacts artifacts;
  artifacts.run_dir = run_dir;
  artifacts.final_report = last_report;
  return artifacts;
}

std::vector<RunArtifacts> run_training(const ExperimentConfig& config,
                                       bool parallel_seeds) {
  config.validate();
  const DatasetPair data = load_dataset(config);
  std::vector<RunArtifacts> results(config.seeds.size());
  if (!parallel_seeds || config.seeds.size() == 1) {
    for (std::size_t i = 0; i < config.seeds.size(); ++i) {
      results[i] = train_single_seed(config, data, config.seeds[i]);
    }
    return results;
  }
  std::vector<std::thread> workers;
  std::vector<std::exception_ptr> failures(config.seeds.size());
  for (std::size_t i = 0; i < config.seeds.size(); ++i) {
    workers.emplace_back([&, i] {
      try {
        results[i] = train_single_seed(config, data, config.seeds[i]);
      } catch (...) {
        failures[i] = std::current_exception();
      }
    });
  }
  for (auto& w : workers) w.join();
  for (const auto& failure : failures) {
    if (failure) std::rethrow_exception(failure);
  }
  return results;
}

void save_checkpoint(const std::filesystem::path& path, const Model& model,
                     const UpdaterState& updater, std::int64_t step) {
  json j;
  j["model_config"] = model.cfg;
  j["schema"] = json{{"dense_count", model.schema.dense_count},
                     {"sparse_count", model.schema.sparse_count},
                     {"has_user_id", model.schema.has_user_id},
                     {"sparse_vocab", model.schema.sparse_vocab}};
  j["step"] = step;
  j["updater"] = json{{"sigma_p", updater.sigma_p},
                      {"sigma_pp", updater.sigma_pp},
                      {"mu_p", updater.mu_p},
                      {"mu_pp", updater.mu_pp},
                      {"rho", updater.rho}};
  json params = json::object();
  for (const auto& [name, matrix] : model.named_params()) {
    params[name] = matrix->data;
  }
  j["params"] = std::move(params);
  write_text_file(path, j.dump());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open checkpoint: " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("checkpoint parse error: ") + e.what());
  }
  Checkpoint ckpt;
  const ModelConfig cfg = j.at("model_config").get<ModelConfig>();
  FeatureSchema schema;
  schema.dense_count = j.at("schema").at("dense_count").get<std::size_t>();
  schema.sparse_count = j.at("schema").at("sparse_count").get<std::size_t>();
  schema.has_user_id = j.at("schema").at("has_user_id").get<bool>();
  schema.sparse_vocab =
      j.at("schema").at("sparse_vocab").get<std::vector<std::size_t>>();
  ckpt.model = Model::build(cfg, schema);
  ckpt.step = j.at("step").get<std::int64_t>();
  ckpt.updater.sigma_p = j.at("updater").at("sigma_p").get<double>();
  ckpt.updater.sigma_pp = j.at("updater").at("sigma_pp").get<double>();
  ckpt.updater.mu_p = j.at("updater").at("mu_p").get<double>();
  ckpt.updater.mu_pp = j.at("updater").at("mu_pp").get<double>();
  ckpt.updater.rho = j.at("updater").at("rho").get<double>();
  const json& params = j.at("params");
  for (auto& [name, matrix] : ckpt.model.named_params()) {
    if (!params.contains(name)) {
      throw ConfigError("checkpoint missing parameter array: " + name);
    }
    const auto values = params.at(name).get<std::vector<double>>();
    if (values.size() != matrix->size()) {
      throw ShapeError("checkpoint parameter size mismatch for " + name);
    }
    matrix->data = values;
  }
  return ckpt;
}

EvalReport evaluate_run_dir(const std::filesystem::path& run_dir,
                            const std::string& split) {
  if (!std::filesystem::exists(run_dir / "checkpoint.json")) {
    throw IoError("no checkpoint in run dir: " + run_dir.string());
  }
  const ExperimentConfig config = load_experiment_file(run_dir / "config.json");
  const DatasetPair data = load_dataset(config);
  const LabeledDataset& dataset = (split == "train") ? data.train : data.test;
  Checkpoint ckpt = load_checkpoint(run_dir / "checkpoint.json");
  return evaluate_model(ckpt.model, ckpt.updater, dataset, config.batch_size,
                        config.seeds.front(), config.dataset_tag() + "/" + split);
}

void write_synthetic_csvs(const SyntheticSpec& spec,
                          const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  const auto [train, test] = gen_synthetic(spec);
  const std::size_t n_dense = spec.n_features - spec.n_sparse;

  auto write_split = [&](const LabeledDataset& ds, const std::string& name) {
    std::ofstream out(out_dir / (name + ".csv"));
    if (!out) throw IoError("cannot write dataset csv in " + out_dir.string());
    for (std::size_t j = 0; j < n_dense; ++j) out << "f" << j << ",";
    for (std::size_t s = 0; s < spec.n_sparse; ++s) out << "s" << s << ",";
    if (spec.user_id_column) out << "user_id,";
    out << "raw_label1,raw_label2,label1,label2\n";
    for (std::size_t i = 0; i < ds.size(); ++i) {
      for (std::size_t j = 0; j < n_dense; ++j) {
        out << format_g17(ds.dense(i, j)) << ",";
      }
      for (std::size_t s = 0; s < spec.n_sparse; ++s) out << ds.sparse[s][i] << ",";
      if (spec.user_id_column) out << ds.user_ids[i] << ",";
      out << format_g17(ds.raw_label1[i]) << "," << format_g17(ds.raw_label2[i]) << ","
          << static_cast<int>(ds.label1[i]) << "," << static_cast<int>(ds.label2[i])
          << "\n";
    }
    if (!out) throw IoError("write failed for dataset csv in " + out_dir.string());
  };
  write_split(train, "train");
  write_split(test, "test");

  json manifest;
  manifest["spec"] = spec;
  manifest["rows"] = {{"train", train.size()}, {"test", test.size()}};
  manifest["files"] = {"train.csv", "test.csv"};
  write_text_file(out_dir / "manifest.json", manifest.dump(2));
}

}  // namespace drgrad
