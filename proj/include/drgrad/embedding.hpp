#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "drgrad/matrix.hpp"
#include "drgrad/rng.hpp"

namespace drgrad {

// Lookup table for sparse integer features. Raw ids are folded into the
// vocabulary by modulo bucketing, so arbitrary ids are always in range.
struct EmbeddingTable {
  std::string name;
  std::size_t vocab = 0;
  std::size_t dim = 0;
  DenseMatrix rows;  // vocab x dim

  static EmbeddingTable init(std::string name, std::size_t vocab, std::size_t dim,
                             SeededRng& rng);

  std::size_t bucket(std::int64_t raw_id) const;

  // batch lookup -> B x dim
  DenseMatrix lookup(const std::vector<std::int64_t>& ids) const;
  // scatter-add of output gradients into a vocab x dim gradient matrix
  DenseMatrix grad_from(const std::vector<std::int64_t>& ids,
                        const DenseMatrix& output_grad) const;
};

}  // namespace drgrad
