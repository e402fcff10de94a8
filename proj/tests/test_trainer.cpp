#include "doctest.h"

#include <filesystem>
#include <fstream>

#include "drgrad/error.hpp"
#include "drgrad/trainer.hpp"

using namespace drgrad;

namespace {

std::filesystem::path temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("drgrad_train_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

// Small, fast experiment on the synthetic source.
ExperimentConfig tiny_config(ModelMode mode, const std::string& out,
                             bool user_ids = false) {
  ExperimentConfig config;
  SyntheticSpec spec;
  spec.n_total = 660;
  spec.n_train = 600;
  spec.n_features = 10;
  spec.n_sparse = 2;
  spec.cos_theta = -0.6;
  spec.seed = 99;
  spec.user_id_column = user_ids;
  config.synthetic = spec;
  config.model.mode = mode;
  config.model.num_experts = 2;
  config.model.expert_dims = {8, 6};
  config.model.tower_dims = {6, 1};
  config.model.embedding_dim = 4;
  config.model.embedding_buckets = 50;
  config.epochs = 1;
  config.batch_size = 64;
  config.out_dir = out;
  config.seeds = {3};
  return config;
}

}  // namespace

TEST_SUITE_BEGIN("trainer");

TEST_CASE("experiment config json roundtrip and overrides") {
  ExperimentConfig config = tiny_config(ModelMode::kDrgradNoPpnet, "x");
  config.model.gamma = 1.5;
  config.model.rho = 0.97;
  const std::string text = experiment_to_json(config);
  const ExperimentConfig back = experiment_from_json(text);
  CHECK(back.model.mode == ModelMode::kDrgradNoPpnet);
  CHECK(back.model.gamma == 1.5);
  CHECK(back.model.rho == 0.97);
  CHECK(back.synthetic->cos_theta == -0.6);
  CHECK(back.batch_size == 64);

  CHECK_THROWS_AS(experiment_from_json("{not json"), ConfigError);

  ExperimentConfig both = config;
  both.census_dir = "somewhere";
  CHECK_THROWS_AS(both.validate(), ConfigError);
}

TEST_CASE("train run produces the four run artifacts") {
  const auto out = temp_dir("artifacts");
  ExperimentConfig config = tiny_config(ModelMode::kMmoe, out.string());
  const auto artifacts = run_training(config);
  REQUIRE(artifacts.size() == 1);
  const auto& run_dir = artifacts[0].run_dir;
  CHECK(std::filesystem::exists(run_dir / "config.json"));
  CHECK(std::filesystem::exists(run_dir / "telemetry.csv"));
  CHECK(std::filesystem::exists(run_dir / "eval.csv"));
  CHECK(std::filesystem::exists(run_dir / "checkpoint.json"));
}

TEST_CASE("drgrad telemetry carries live router and updater columns") {
  const auto out = temp_dir("telemetry");
  ExperimentConfig config = tiny_config(ModelMode::kDrgrad, out.string(), true);
  const auto artifacts = run_training(config);
  const auto records = read_telemetry(artifacts[0].run_dir / "telemetry.csv");
  REQUIRE(records.size() >= 9);
  bool xi_moves = false, lambda_set = false, mu_moves = false, routed = false;
  for (const auto& r : records) {
    xi_moves |= r.xi_a != 0.0 || r.xi_b != 0.0;
    lambda_set |= r.lambda_a > 0.0 && r.lambda_b > 0.0;
    mu_moves |= r.mu_p != 0.5;
    routed |= r.norm_gr1p > 0.0;
  }
  CHECK(xi_moves);
  CHECK(lambda_set);
  CHECK(mu_moves);
  CHECK(routed);
}

TEST_CASE("ablation identity: frozen updater reproduces split_mmoe_router") {
  const auto out_a = temp_dir("ablation_a");
  const auto out_b = temp_dir("ablation_b");
  ExperimentConfig router_cfg = tiny_config(ModelMode::kSplitMmoeRouter, out_a.string());
  ExperimentConfig frozen_cfg = tiny_config(ModelMode::kDrgradNoPpnet, out_b.string());
  frozen_cfg.model.freeze_updater = true;
  const auto a = run_training(router_cfg);
  const auto b = run_training(frozen_cfg);
  CHECK(read_file(a[0].run_dir / "telemetry.csv") ==
        read_file(b[0].run_dir / "telemetry.csv"));
  // eval.csv embeds the mode name; the numbers must agree exactly
  CHECK(a[0].final_report.auc_task1 == b[0].final_report.auc_task1);
  CHECK(a[0].final_report.auc_task2 == b[0].final_report.auc_task2);
  CHECK(a[0].final_report.loss_task1 == b[0].final_report.loss_task1);
  CHECK(a[0].final_report.loss_task2 == b[0].final_report.loss_task2);
}

TEST_CASE("end-to-end determinism: identical config, identical eval bytes") {
  const auto out_a = temp_dir("det_a");
  const auto out_b = temp_dir("det_b");
  ExperimentConfig config = tiny_config(ModelMode::kDrgradNoPpnet, out_a.string());
  const auto a = run_training(config);
  config.out_dir = out_b.string();
  const auto b = run_training(config);
  CHECK(read_file(a[0].run_dir / "eval.csv") == read_file(b[0].run_dir / "eval.csv"));
  CHECK(read_file(a[0].run_dir / "telemetry.csv") ==
        read_file(b[0].run_dir / "telemetry.csv"));
}

TEST_CASE("checkpoint roundtrips bit-exactly and eval is repeatable") {
  const auto out = temp_dir("checkpoint");
  ExperimentConfig config = tiny_config(ModelMode::kSplitMmoe, out.string());
  const auto artifacts = run_training(config);
  const auto& run_dir = artifacts[0].run_dir;

  const Checkpoint ckpt = load_checkpoint(run_dir / "checkpoint.json");
  const auto tmp = run_dir / "checkpoint_copy.json";
  save_checkpoint(tmp, ckpt.model, ckpt.updater, ckpt.step);
  const Checkpoint again = load_checkpoint(tmp);
  const auto params_a = ckpt.model.named_params();
  const auto params_b = again.model.named_params();
  REQUIRE(params_a.size() == params_b.size());
  for (std::size_t i = 0; i < params_a.size(); ++i) {
    CHECK(params_a[i].second->data == params_b[i].second->data);
  }

  const EvalReport e1 = evaluate_run_dir(run_dir, "test");
  const EvalReport e2 = evaluate_run_dir(run_dir, "test");
  CHECK(e1.auc_task1 == e2.auc_task1);
  CHECK(e1.loss_task2 == e2.loss_task2);
  const EvalReport train_report = evaluate_run_dir(run_dir, "train");
  CHECK(train_report.dataset == "synthetic/train");
  CHECK(e1.dataset == "synthetic/test");
  CHECK(e1.dataset != train_report.dataset);
}

TEST_CASE("untrained model scores at chance on the balanced synthetic test") {
  double sum = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto out = temp_dir("chance" + std::to_string(seed));
    ExperimentConfig config = tiny_config(ModelMode::kMmoe, out.string());
    config.synthetic->n_total = 3000;
    config.synthetic->n_train = 2000;
    config.epochs = 0;
    config.seeds = {seed};
    const auto artifacts = run_training(config);
    sum += artifacts[0].final_report.auc_task1;
  }
  const double mean = sum / 5.0;
  CHECK(mean > 0.45);
  CHECK(mean < 0.55);
}

TEST_CASE("mode lattice: every mode runs or is rejected with a config error") {
  const std::vector<ModelMode> modes = {
      ModelMode::kMmoe,          ModelMode::kSplitMmoe, ModelMode::kSplitMmoeRouter,
      ModelMode::kDrgradNoPpnet, ModelMode::kDrgrad,    ModelMode::kPcgradMmoe};
  // synthetic without a personalized column: drgrad must be rejected
  for (const ModelMode mode : modes) {
    const auto out = temp_dir("lattice_plain_" + to_string(mode));
    ExperimentConfig config = tiny_config(mode, out.string(), false);
    if (mode == ModelMode::kDrgrad) {
      CHECK_THROWS_AS(run_training(config), ConfigError);
    } else {
      CHECK(run_training(config).size() == 1);
    }
  }
  // synthetic with the user-id column: everything runs
  for (const ModelMode mode : modes) {
    const auto out = temp_dir("lattice_user_" + to_string(mode));
    ExperimentConfig config = tiny_config(mode, out.string(), true);
    CHECK(run_training(config).size() == 1);
  }
}

TEST_CASE("diverged training aborts with a diagnostic record") {
  const auto out = temp_dir("diverge");
  ExperimentConfig config = tiny_config(ModelMode::kMmoe, out.string());
  config.model.optimizer = OptimizerKind::kSgd;
  config.model.learning_rate = 1e150;
  CHECK_THROWS_AS(run_training(config), NumericError);
  CHECK(std::filesystem::exists(std::filesystem::path(out) / "seed3" /
                                "diagnostic.json"));
}

TEST_CASE("gen-data output is deterministic and complete") {
  const auto out_a = temp_dir("gen_a");
  const auto out_b = temp_dir("gen_b");
  SyntheticSpec spec;
  spec.n_total = 120;
  spec.n_train = 100;
  spec.n_features = 8;
  spec.n_sparse = 2;
  spec.cos_theta = 0.6;
  spec.seed = 5;
  write_synthetic_csvs(spec, out_a);
  write_synthetic_csvs(spec, out_b);
  CHECK(std::filesystem::exists(out_a / "train.csv"));
  CHECK(std::filesystem::exists(out_a / "test.csv"));
  CHECK(std::filesystem::exists(out_a / "manifest.json"));
  CHECK(read_file(out_a / "train.csv") == read_file(out_b / "train.csv"));
  CHECK(read_file(out_a / "test.csv") == read_file(out_b / "test.csv"));

  std::ifstream in(out_a / "train.csv");
  std::string header;
  std::getline(in, header);
  CHECK(header == "f0,f1,f2,f3,f4,f5,s0,s1,raw_label1,raw_label2,label1,label2");
  std::size_t rows = 0;
  std::string line;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 100);
}

TEST_CASE("parallel seeds produce the same artifacts as sequential") {
  const auto out_a = temp_dir("par_a");
  const auto out_b = temp_dir("par_b");
  ExperimentConfig config = tiny_config(ModelMode::kSplitMmoeRouter, out_a.string());
  config.seeds = {1, 2};
  const auto seq = run_training(config, false);
  config.out_dir = out_b.string();
  const auto par = run_training(config, true);
  REQUIRE(seq.size() == 2);
  REQUIRE(par.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(read_file(seq[i].run_dir / "eval.csv") ==
          read_file(par[i].run_dir / "eval.csv"));
  }
}

TEST_SUITE_END();
