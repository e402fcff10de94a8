#include "drgrad/embedding.hpp"

#include <utility>

#include "drgrad/error.hpp"

namespace drgrad {

EmbeddingTable EmbeddingTable::init(std::string name, std::size_t vocab, std::size_t dim,
                                    SeededRng& rng) {
  if (vocab == 0 || dim == 0) {
    throw ConfigError("EmbeddingTable " + name + ": vocab and dim must be positive");
  }
  EmbeddingTable table;
  table.name = std::move(name);
  table.vocab = vocab;
  table.dim = dim;
  table.rows = DenseMatrix(vocab, dim);
  for (double& v : table.rows.data) v = rng.glorot_uniform(vocab, dim);
  return table;
}

std::size_t EmbeddingTable::bucket(std::int64_t raw_id) const {
  const auto v = static_cast<std::int64_t>(vocab);
  return static_cast<std::size_t>(((raw_id % v) + v) % v);
}

DenseMatrix EmbeddingTable::lookup(const std::vector<std::int64_t>& ids) const {
  DenseMatrix out(ids.size(), dim);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const std::size_t row = bucket(ids[i]);
    for (std::size_t j = 0; j < dim; ++j) out(i, j) = rows(row, j);
  }
  return out;
}

DenseMatrix EmbeddingTable::grad_from(const std::vector<std::int64_t>& ids,
                                      const DenseMatrix& output_grad) const {
  if (output_grad.rows != ids.size() || output_grad.cols != dim) {
    throw ShapeError("EmbeddingTable " + name + ": gradient shape mismatch");
  }
  DenseMatrix grad(vocab, dim);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const std::size_t row = bucket(ids[i]);
    for (std::size_t j = 0; j < dim; ++j) grad(row, j) += output_grad(i, j);
  }
  return grad;
}

}  // namespace drgrad
