#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "drgrad/dataset.hpp"

namespace drgrad {

// Column map for the census-income (KDD) files: 41 attribute columns plus
// the income label. Task 1 is income > 50K, task 2 is marital status never
// married; both label columns are excluded from the features, everything
// else (40 columns) is mapped.
struct CensusSchema {
  struct Column {
    std::string name;
    bool continuous = false;
  };
  std::vector<Column> columns;  // the 42 file columns in order
  std::size_t marital_index = 0;
  std::size_t income_index = 0;

  static const CensusSchema& kdd();
  std::size_t feature_count() const { return columns.size() - 2; }
};

struct CensusLoadReport {
  std::size_t rows_loaded = 0;
  std::size_t rows_skipped = 0;
};

// Parses one comma-separated census file (no header, fields may carry
// surrounding whitespace). Categorical levels are id-encoded from the train
// split with id 0 reserved for categories unseen at train time; continuous
// columns are z-scored by train statistics.
std::pair<LabeledDataset, LabeledDataset> load_census(
    const std::filesystem::path& train_file, const std::filesystem::path& test_file,
    CensusLoadReport* report = nullptr);

// Convenience: directory containing census-income.data / census-income.test.
std::pair<LabeledDataset, LabeledDataset> load_census(
    const std::filesystem::path& directory, CensusLoadReport* report = nullptr);

}  // namespace drgrad
