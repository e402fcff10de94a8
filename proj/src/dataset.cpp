#include "drgrad/dataset.hpp"

#include <numeric>

#include "drgrad/error.hpp"

namespace drgrad {

FeatureSchema LabeledDataset::feature_schema() const {
  FeatureSchema schema;
  schema.dense_count = dense.cols;
  schema.sparse_count = sparse.size();
  schema.has_user_id = !user_ids.empty();
  schema.sparse_vocab = sparse_vocab;
  return schema;
}

std::vector<std::vector<std::size_t>> batch_indices(std::size_t n, std::size_t batch_size,
                                                    SeededRng& rng) {
  if (n == 0) throw ConfigError("batch_indices: empty dataset");
  if (batch_size == 0) throw ConfigError("batch_indices: batch_size must be >= 1");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(order);
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t start = 0; start < n; start += batch_size) {
    const std::size_t end = std::min(n, start + batch_size);
    batches.emplace_back(order.begin() + start, order.begin() + end);
  }
  return batches;
}

Batch gather(const LabeledDataset& dataset, const std::vector<std::size_t>& indices) {
  Batch batch;
  batch.dense = DenseMatrix(indices.size(), dataset.dense.cols);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const std::size_t r = indices[i];
    for (std::size_t j = 0; j < dataset.dense.cols; ++j) {
      batch.dense(i, j) = dataset.dense(r, j);
    }
  }
  batch.sparse.resize(dataset.sparse.size());
  for (std::size_t s = 0; s < dataset.sparse.size(); ++s) {
    batch.sparse[s].reserve(indices.size());
    for (std::size_t r : indices) batch.sparse[s].push_back(dataset.sparse[s][r]);
  }
  if (!dataset.user_ids.empty()) {
    batch.user_ids.reserve(indices.size());
    for (std::size_t r : indices) batch.user_ids.push_back(dataset.user_ids[r]);
  }
  batch.label1.reserve(indices.size());
  batch.label2.reserve(indices.size());
  for (std::size_t r : indices) {
    batch.label1.push_back(dataset.label1[r]);
    batch.label2.push_back(dataset.label2[r]);
  }
  return batch;
}

}  // namespace drgrad
