#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <tuple>
#include <vector>

namespace graphaug {

/// Row-major dense matrix of doubles.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> values);

  static DenseMatrix identity(std::size_t n);
  static DenseMatrix scalar(double v) { return DenseMatrix(1, 1, v); }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }
  bool same_shape(const DenseMatrix& o) const noexcept {
    return rows_ == o.rows_ && cols_ == o.cols_;
  }

  double& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {values_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {values_.data() + r * cols_, cols_}; }

  std::vector<double>& values() noexcept { return values_; }
  const std::vector<double>& values() const noexcept { return values_; }
  double* data() noexcept { return values_.data(); }
  const double* data() const noexcept { return values_.data(); }

  /// Value of a 1x1 matrix.
  double item() const;
  bool all_finite() const noexcept;
  double squared_norm() const noexcept;

  DenseMatrix transposed() const;
  DenseMatrix& operator+=(const DenseMatrix& o);
  DenseMatrix& operator*=(double s);

  friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);

using Triplet = std::tuple<std::uint32_t, std::uint32_t, double>;

/// Compressed sparse row matrix. Column indices are strictly increasing
/// within each row.
class SparseMatrix {
 public:
  SparseMatrix() = default;
  SparseMatrix(std::size_t rows, std::size_t cols);
  /// Takes ownership of CSR arrays; validates the layout.
  SparseMatrix(std::size_t rows, std::size_t cols, std::vector<std::size_t> offsets,
               std::vector<std::uint32_t> columns, std::vector<double> values);

  /// Builds from (row, col, value) triplets. Duplicate coordinates are summed.
  static SparseMatrix from_triplets(std::size_t rows, std::size_t cols,
                                    std::vector<Triplet> triplets);
  static SparseMatrix identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t nnz() const noexcept { return columns_.size(); }

  const std::vector<std::size_t>& offsets() const noexcept { return offsets_; }
  const std::vector<std::uint32_t>& columns() const noexcept { return columns_; }
  const std::vector<double>& values() const noexcept { return values_; }
  std::vector<double>& values() noexcept { return values_; }

  /// Stored value at (r, c), or 0 when absent.
  double at(std::size_t r, std::size_t c) const;
  /// Position of (r, c) in the values array, or nnz() when absent.
  std::size_t find(std::size_t r, std::size_t c) const;

  DenseMatrix to_dense() const;
  SparseMatrix transposed() const;

  /// this * dense, with an optional replacement for the stored values
  /// (same length as nnz()).
  DenseMatrix multiply(const DenseMatrix& dense) const;
  DenseMatrix multiply(std::span<const double> values, const DenseMatrix& dense) const;
  /// transpose(this) * dense without materializing the transpose.
  DenseMatrix multiply_transposed(std::span<const double> values, const DenseMatrix& dense) const;

 private:
  void validate() const;

  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::size_t> offsets_{0};
  std::vector<std::uint32_t> columns_;
  std::vector<double> values_;
};

}  // namespace graphaug
