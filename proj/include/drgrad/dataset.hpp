#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "drgrad/matrix.hpp"
#include "drgrad/model.hpp"
#include "drgrad/rng.hpp"

namespace drgrad {

// Immutable after construction; shareable read-only across threads.
struct LabeledDataset {
  DenseMatrix dense;                              // n x dense_count
  std::vector<std::vector<std::int64_t>> sparse;  // [column][n]
  std::vector<std::int64_t> user_ids;             // n, or empty
  std::vector<double> raw_label1, raw_label2;     // synthetic only
  std::vector<double> label1, label2;             // binary {0,1}
  std::string split;                              // "train" / "test"
  std::vector<std::size_t> sparse_vocab;          // per-column vocab, may be empty

  std::size_t size() const { return dense.rows; }
  FeatureSchema feature_schema() const;
};

// Seeded index batches for one epoch: a full shuffle sliced into batch_size
// chunks, final short batch included.
std::vector<std::vector<std::size_t>> batch_indices(std::size_t n, std::size_t batch_size,
                                                    SeededRng& rng);

Batch gather(const LabeledDataset& dataset, const std::vector<std::size_t>& indices);

}  // namespace drgrad
