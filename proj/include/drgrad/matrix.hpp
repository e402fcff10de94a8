#pragma once

#include <cstddef>
#include <vector>

namespace drgrad {

// Row-major dense matrix of doubles. All numeric state in the project
// (activations, parameters, gradients) lives in these.
struct DenseMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  DenseMatrix() = default;
  DenseMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}
  DenseMatrix(std::size_t r, std::size_t c, std::vector<double> values);

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  std::size_t size() const { return data.size(); }
  bool same_shape(const DenseMatrix& other) const {
    return rows == other.rows && cols == other.cols;
  }
  void fill(double value);
  bool all_finite() const;
};

// C = A * B
DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);
// C = A^T * B  (weight gradients: dW = X^T * dZ)
DenseMatrix matmul_at_b(const DenseMatrix& a, const DenseMatrix& b);
// C = A * B^T  (input gradients: dX = dZ * W^T)
DenseMatrix matmul_a_bt(const DenseMatrix& a, const DenseMatrix& b);

void add_row_inplace(DenseMatrix& m, const DenseMatrix& row);  // row is 1 x cols
DenseMatrix column_sums(const DenseMatrix& m);                 // 1 x cols
void add_inplace(DenseMatrix& dst, const DenseMatrix& src);
void scale_inplace(DenseMatrix& m, double factor);

}  // namespace drgrad
