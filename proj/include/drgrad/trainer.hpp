#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "drgrad/census.hpp"
#include "drgrad/dataset.hpp"
#include "drgrad/metrics.hpp"
#include "drgrad/model.hpp"
#include "drgrad/synthetic.hpp"
#include "drgrad/updater.hpp"

namespace drgrad {

// A full experiment: one dataset source, one model config, one or more seeds.
struct ExperimentConfig {
  std::optional<SyntheticSpec> synthetic;
  std::optional<std::string> census_dir;
  ModelConfig model;
  std::size_t epochs = 5;
  std::size_t batch_size = 256;
  std::size_t eval_every = 1;        // in epochs
  std::size_t telemetry_stride = 1;  // record every k-th step
  std::string out_dir = "runs/experiment";
  std::vector<std::uint64_t> seeds = {1};

  void validate() const;
  std::string dataset_tag() const;  // "synthetic" or "census"
};

std::string experiment_to_json(const ExperimentConfig& config);
ExperimentConfig experiment_from_json(const std::string& text);
ExperimentConfig load_experiment_file(const std::filesystem::path& path);

struct DatasetPair {
  LabeledDataset train;
  LabeledDataset test;
};

DatasetPair load_dataset(const ExperimentConfig& config);

// Per-seed run directory: config.json, telemetry.csv, eval.csv,
// checkpoint.json.
struct RunArtifacts {
  std::filesystem::path run_dir;
  EvalReport final_report;
};

RunArtifacts train_single_seed(const ExperimentConfig& config, const DatasetPair& data,
                               std::uint64_t seed);

// Runs every seed; with parallel_seeds each seed trains on its own thread
// (runs share nothing but the immutable dataset).
std::vector<RunArtifacts> run_training(const ExperimentConfig& config,
                                       bool parallel_seeds = false);

// Model snapshot; round-trips bit-exactly through JSON.
void save_checkpoint(const std::filesystem::path& path, const Model& model,
                     const UpdaterState& updater, std::int64_t step);

struct Checkpoint {
  Model model;
  UpdaterState updater;
  std::int64_t step = 0;
};

Checkpoint load_checkpoint(const std::filesystem::path& path);

EvalReport evaluate_model(const Model& model, const UpdaterState& updater,
                          const LabeledDataset& dataset, std::size_t batch_size,
                          std::uint64_t seed, const std::string& dataset_tag);

// cmd_eval: re-evaluates a finished run directory on the requested split.
EvalReport evaluate_run_dir(const std::filesystem::path& run_dir,
                            const std::string& split);

// gen-data: writes one CSV per split plus manifest.json into out_dir.
void write_synthetic_csvs(const SyntheticSpec& spec,
                          const std::filesystem::path& out_dir);

}  // namespace drgrad
