// Command-line front end: dataset generation, training, evaluation and
// telemetry summaries for the gradient-routing experiments.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "drgrad/error.hpp"
#include "drgrad/metrics.hpp"
#include "drgrad/trainer.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;

struct CommonFlags {
  std::string config_path;
  std::string mode;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::optional<double> gamma;
  std::optional<double> rho;
  std::optional<double> cos_theta;
};

void add_common_flags(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_path, "experiment config JSON");
  cmd->add_option("--mode", flags.mode, "model mode override");
  cmd->add_option("--seed", flags.seed, "single seed override");
  cmd->add_option("--out", flags.out_dir, "output directory override");
  cmd->add_option("--gamma", flags.gamma, "router scale exponent override");
  cmd->add_option("--rho", flags.rho, "updater decay override");
  cmd->add_option("--cos-theta", flags.cos_theta, "synthetic label direction override");
}

drgrad::ExperimentConfig effective_config(const CommonFlags& flags) {
  drgrad::ExperimentConfig config;
  if (!flags.config_path.empty()) {
    config = drgrad::load_experiment_file(flags.config_path);
  } else {
    config.synthetic = drgrad::SyntheticSpec{};
  }
  if (!flags.mode.empty()) config.model.mode = drgrad::mode_from_string(flags.mode);
  if (flags.seed) config.seeds = {*flags.seed};
  if (!flags.out_dir.empty()) config.out_dir = flags.out_dir;
  if (flags.gamma) config.model.gamma = *flags.gamma;
  if (flags.rho) config.model.rho = *flags.rho;
  if (flags.cos_theta) {
    if (!config.synthetic) {
      throw drgrad::ConfigError("--cos-theta applies to synthetic datasets only");
    }
    config.synthetic->cos_theta = *flags.cos_theta;
  }
  return config;
}

int run_gen_data(const CommonFlags& flags) {
  drgrad::ExperimentConfig config = effective_config(flags);
  if (!config.synthetic) {
    throw drgrad::ConfigError("gen-data needs a synthetic dataset spec");
  }
  config.synthetic->validate();
  drgrad::write_synthetic_csvs(*config.synthetic, config.out_dir);
  std::cout << "wrote train.csv, test.csv, manifest.json to " << config.out_dir << "\n";
  return kExitOk;
}

int run_train(const CommonFlags& flags, bool parallel_seeds) {
  const drgrad::ExperimentConfig config = effective_config(flags);
  const auto artifacts = drgrad::run_training(config, parallel_seeds);
  std::vector<drgrad::EvalReport> reports;
  for (const auto& a : artifacts) {
    std::cout << "run dir: " << a.run_dir.string() << "\n";
    reports.push_back(a.final_report);
  }
  std::cout << drgrad::result_table(reports).text;
  return kExitOk;
}

int run_eval(const std::string& run_dir, const std::string& split) {
  const drgrad::EvalReport report = drgrad::evaluate_run_dir(run_dir, split);
  nlohmann::json j{{"mode", report.mode},       {"seed", report.seed},
                   {"dataset", report.dataset}, {"auc_task1", report.auc_task1},
                   {"auc_task2", report.auc_task2}, {"loss_task1", report.loss_task1},
                   {"loss_task2", report.loss_task2}};
  std::cout << j.dump(2) << "\n";
  return kExitOk;
}

int run_telemetry_summary(const std::string& path_arg) {
  std::filesystem::path path(path_arg);
  if (std::filesystem::is_directory(path)) path /= "telemetry.csv";
  const auto records = drgrad::read_telemetry(path);
  const auto summary = drgrad::convergence_summary(records);
  nlohmann::json j{{"steps", records.size()},
                   {"first_abs_xi_a", summary.first_abs_xi_a},
                   {"last_abs_xi_a", summary.last_abs_xi_a},
                   {"first_abs_xi_b", summary.first_abs_xi_b},
                   {"last_abs_xi_b", summary.last_abs_xi_b},
                   {"first_norm_ratio", summary.first_norm_ratio},
                   {"last_norm_ratio", summary.last_norm_ratio}};
  std::cout << j.dump(2) << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-task learning lab: gradient routing over an MMoE backbone"};
  app.require_subcommand(1);

  CommonFlags flags;
  bool parallel_seeds = false;

  CLI::App* gen = app.add_subcommand("gen-data", "generate the synthetic dataset CSVs");
  add_common_flags(gen, flags);

  CLI::App* train = app.add_subcommand("train", "train one run directory per seed");
  add_common_flags(train, flags);
  train->add_flag("--parallel-seeds", parallel_seeds, "train seeds concurrently");

  std::string eval_run_dir;
  std::string eval_split = "test";
  CLI::App* eval = app.add_subcommand("eval", "evaluate a finished run directory");
  eval->add_option("run_dir", eval_run_dir, "run directory with checkpoint.json")
      ->required();
  eval->add_option("--split", eval_split, "train or test")
      ->check(CLI::IsMember({"train", "test"}));

  std::string telemetry_path;
  CLI::App* summary =
      app.add_subcommand("telemetry-summary", "windowed telemetry statistics");
  summary->add_option("telemetry", telemetry_path, "telemetry.csv or run directory")
      ->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return run_gen_data(flags);
    if (train->parsed()) return run_train(flags, parallel_seeds);
    if (eval->parsed()) return run_eval(eval_run_dir, eval_split);
    if (summary->parsed()) return run_telemetry_summary(telemetry_path);
  } catch (const drgrad::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const drgrad::SchemaError& e) {
    std::cerr << "schema error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const drgrad::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitFailure;
}
