#include "graphaug/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "graphaug/errors.hpp"

namespace graphaug {

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), values_(rows * cols, fill) {}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (values_.size() != rows * cols) {
    throw ContractViolation("DenseMatrix: expected " + std::to_string(rows * cols) +
                            " values, got " + std::to_string(values_.size()));
  }
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
  DenseMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

double DenseMatrix::item() const {
  if (rows_ != 1 || cols_ != 1) {
    throw ContractViolation("item() on a " + std::to_string(rows_) + "x" +
                            std::to_string(cols_) + " matrix");
  }
  return values_[0];
}

bool DenseMatrix::all_finite() const noexcept {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

double DenseMatrix::squared_norm() const noexcept {
  double s = 0.0;
  for (double v : values_) s += v * v;
  return s;
}

DenseMatrix DenseMatrix::transposed() const {
  DenseMatrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  return t;
}

DenseMatrix& DenseMatrix::operator+=(const DenseMatrix& o) {
  if (!same_shape(o)) throw ContractViolation("DenseMatrix +=: shape mismatch");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += o.values_[i];
  return *this;
}

DenseMatrix& DenseMatrix::operator*=(double s) {
  for (double& v : values_) v *= s;
  return *this;
}

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.rows()) {
    throw ContractViolation("matmul: " + std::to_string(a.rows()) + "x" +
                            std::to_string(a.cols()) + " times " + std::to_string(b.rows()) +
                            "x" + std::to_string(b.cols()));
  }
  DenseMatrix out(a.rows(), b.cols());
  const std::size_t n = b.cols();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double* orow = out.data() + i * n;
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      const double* brow = b.data() + k * n;
      for (std::size_t j = 0; j < n; ++j) orow[j] += aik * brow[j];
    }
  }
  return out;
}

SparseMatrix::SparseMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), offsets_(rows + 1, 0) {}

SparseMatrix::SparseMatrix(std::size_t rows, std::size_t cols, std::vector<std::size_t> offsets,
                           std::vector<std::uint32_t> columns, std::vector<double> values)
    : rows_(rows),
      cols_(cols),
      offsets_(std::move(offsets)),
      columns_(std::move(columns)),
      values_(std::move(values)) {
  validate();
}

void SparseMatrix::validate() const {
  if (offsets_.size() != rows_ + 1 || offsets_.front() != 0 || offsets_.back() != columns_.size())
    throw ContractViolation("SparseMatrix: malformed row offsets");
  if (values_.size() != columns_.size())
    throw ContractViolation("SparseMatrix: values/columns length mismatch");
  for (std::size_t r = 0; r < rows_; ++r) {
    if (offsets_[r] > offsets_[r + 1])
      throw ContractViolation("SparseMatrix: offsets decrease at row " + std::to_string(r));
    for (std::size_t k = offsets_[r]; k < offsets_[r + 1]; ++k) {
      if (columns_[k] >= cols_)
        throw ContractViolation("SparseMatrix: column out of bounds in row " + std::to_string(r));
      if (k > offsets_[r] && columns_[k] <= columns_[k - 1])
        throw ContractViolation("SparseMatrix: columns not strictly increasing in row " +
                                std::to_string(r));
    }
  }
}

SparseMatrix SparseMatrix::from_triplets(std::size_t rows, std::size_t cols,
                                         std::vector<Triplet> triplets) {
  std::sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
    return std::tie(std::get<0>(a), std::get<1>(a)) < std::tie(std::get<0>(b), std::get<1>(b));
  });
  std::vector<std::size_t> offsets(rows + 1, 0);
  std::vector<std::uint32_t> columns;
  std::vector<double> values;
  columns.reserve(triplets.size());
  values.reserve(triplets.size());
  for (std::size_t i = 0; i < triplets.size(); ++i) {
    const auto [r, c, v] = triplets[i];
    if (r >= rows || c >= cols) throw ContractViolation("from_triplets: index out of bounds");
    if (i > 0 && std::get<0>(triplets[i - 1]) == r && std::get<1>(triplets[i - 1]) == c) {
      values.back() += v;
      continue;
    }
    columns.push_back(c);
    values.push_back(v);
    ++offsets[r + 1];
  }
  std::partial_sum(offsets.begin(), offsets.end(), offsets.begin());
  return SparseMatrix(rows, cols, std::move(offsets), std::move(columns), std::move(values));
}

SparseMatrix SparseMatrix::identity(std::size_t n) {
  std::vector<std::size_t> offsets(n + 1);
  std::vector<std::uint32_t> columns(n);
  std::iota(offsets.begin(), offsets.end(), std::size_t{0});
  std::iota(columns.begin(), columns.end(), std::uint32_t{0});
  return SparseMatrix(n, n, std::move(offsets), std::move(columns), std::vector<double>(n, 1.0));
}

std::size_t SparseMatrix::find(std::size_t r, std::size_t c) const {
  const auto begin = columns_.begin() + static_cast<std::ptrdiff_t>(offsets_[r]);
  const auto end = columns_.begin() + static_cast<std::ptrdiff_t>(offsets_[r + 1]);
  const auto it = std::lower_bound(begin, end, static_cast<std::uint32_t>(c));
  if (it == end || *it != c) return nnz();
  return static_cast<std::size_t>(it - columns_.begin());
}

double SparseMatrix::at(std::size_t r, std::size_t c) const {
  const std::size_t k = find(r, c);
  return k == nnz() ? 0.0 : values_[k];
}

DenseMatrix SparseMatrix::to_dense() const {
  DenseMatrix d(rows_, cols_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t k = offsets_[r]; k < offsets_[r + 1]; ++k) d(r, columns_[k]) = values_[k];
  return d;
}

SparseMatrix SparseMatrix::transposed() const {
  std::vector<Triplet> t;
  t.reserve(nnz());
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t k = offsets_[r]; k < offsets_[r + 1]; ++k)
      t.emplace_back(columns_[k], static_cast<std::uint32_t>(r), values_[k]);
  return from_triplets(cols_, rows_, std::move(t));
}

DenseMatrix SparseMatrix::multiply(const DenseMatrix& dense) const {
  return multiply(values_, dense);
}

DenseMatrix SparseMatrix::multiply(std::span<const double> values, const DenseMatrix& dense) const {
  if (dense.rows() != cols_) {
    throw ContractViolation("spmm: sparse " + std::to_string(rows_) + "x" +
                            std::to_string(cols_) + " times dense " +
                            std::to_string(dense.rows()) + "x" + std::to_string(dense.cols()));
  }
  if (values.size() != nnz()) throw ContractViolation("spmm: value vector length != nnz");
  const std::size_t n = dense.cols();
  DenseMatrix out(rows_, n);
  for (std::size_t r = 0; r < rows_; ++r) {
    double* orow = out.data() + r * n;
    for (std::size_t k = offsets_[r]; k < offsets_[r + 1]; ++k) {
      const double w = values[k];
      const double* drow = dense.data() + static_cast<std::size_t>(columns_[k]) * n;
      for (std::size_t j = 0; j < n; ++j) orow[j] += w * drow[j];
    }
  }
  return out;
}

DenseMatrix SparseMatrix::multiply_transposed(std::span<const double> values,
                                              const DenseMatrix& dense) const {
  if (dense.rows() != rows_) throw ContractViolation("spmm^T: dimension mismatch");
  if (values.size() != nnz()) throw ContractViolation("spmm^T: value vector length != nnz");
  const std::size_t n = dense.cols();
  DenseMatrix out(cols_, n);
  for (std::size_t r = 0; r < rows_; ++r) {
    const double* drow = dense.data() + r * n;
    for (std::size_t k = offsets_[r]; k < offsets_[r + 1]; ++k) {
      const double w = values[k];
      double* orow = out.data() + static_cast<std::size_t>(columns_[k]) * n;
      for (std::size_t j = 0; j < n; ++j) orow[j] += w * drow[j];
    }
  }
  return out;
}

}  // namespace graphaug
