#include "drgrad/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "drgrad/error.hpp"

namespace drgrad {

DenseMatrix::DenseMatrix(std::size_t r, std::size_t c, std::vector<double> values)
    : rows(r), cols(c), data(std::move(values)) {
  if (data.size() != rows * cols) {
    throw ShapeError("DenseMatrix: data length does not match rows*cols");
  }
}

void DenseMatrix::fill(double value) { std::fill(data.begin(), data.end(), value); }

bool DenseMatrix::all_finite() const {
  for (double v : data) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols != b.rows) throw ShapeError("matmul: inner dimensions differ");
  DenseMatrix c(a.rows, b.cols);
  for (std::size_t i = 0; i < a.rows; ++i) {
    const double* arow = &a.data[i * a.cols];
    double* crow = &c.data[i * c.cols];
    for (std::size_t k = 0; k < a.cols; ++k) {
      const double aik = arow[k];
      if (aik == 0.0) continue;
      const double* brow = &b.data[k * b.cols];
      for (std::size_t j = 0; j < b.cols; ++j) crow[j] += aik * brow[j];
    }
  }
  return c;
}

DenseMatrix matmul_at_b(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows != b.rows) throw ShapeError("matmul_at_b: row counts differ");
  DenseMatrix c(a.cols, b.cols);
  for (std::size_t k = 0; k < a.rows; ++k) {
    const double* arow = &a.data[k * a.cols];
    const double* brow = &b.data[k * b.cols];
    for (std::size_t i = 0; i < a.cols; ++i) {
      const double aki = arow[i];
      if (aki == 0.0) continue;
      double* crow = &c.data[i * c.cols];
      for (std::size_t j = 0; j < b.cols; ++j) crow[j] += aki * brow[j];
    }
  }
  return c;
}

DenseMatrix matmul_a_bt(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols != b.cols) throw ShapeError("matmul_a_bt: column counts differ");
  DenseMatrix c(a.rows, b.rows);
  for (std::size_t i = 0; i < a.rows; ++i) {
    const double* arow = &a.data[i * a.cols];
    double* crow = &c.data[i * c.cols];
    for (std::size_t j = 0; j < b.rows; ++j) {
      const double* brow = &b.data[j * b.cols];
      double sum = 0.0;
      for (std::size_t k = 0; k < a.cols; ++k) sum += arow[k] * brow[k];
      crow[j] = sum;
    }
  }
  return c;
}

void add_row_inplace(DenseMatrix& m, const DenseMatrix& row) {
  if (row.rows != 1 || row.cols != m.cols) throw ShapeError("add_row_inplace: bad row shape");
  for (std::size_t i = 0; i < m.rows; ++i) {
    double* mrow = &m.data[i * m.cols];
    for (std::size_t j = 0; j < m.cols; ++j) mrow[j] += row.data[j];
  }
}

DenseMatrix column_sums(const DenseMatrix& m) {
  DenseMatrix out(1, m.cols);
  for (std::size_t i = 0; i < m.rows; ++i) {
    const double* mrow = &m.data[i * m.cols];
    for (std::size_t j = 0; j < m.cols; ++j) out.data[j] += mrow[j];
  }
  return out;
}

void add_inplace(DenseMatrix& dst, const DenseMatrix& src) {
  if (!dst.same_shape(src)) throw ShapeError("add_inplace: shape mismatch");
  for (std::size_t i = 0; i < dst.data.size(); ++i) dst.data[i] += src.data[i];
}

void scale_inplace(DenseMatrix& m, double factor) {
  for (double& v : m.data) v *= factor;
}

}  // namespace drgrad
