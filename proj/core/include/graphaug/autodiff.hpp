#pragma once

// Reverse-mode differentiation over DenseMatrix values.
//
// A Tape records operations in execution order, which is a topological
// order, so backward() is a single reverse sweep. Var is a cheap handle
// (tape pointer + node index) and is only meaningful while its tape lives.

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "graphaug/tensor.hpp"

namespace graphaug::ad {

class Tape;

class Var {
 public:
  Var() = default;

  bool valid() const noexcept { return tape_ != nullptr; }
  Tape* tape() const noexcept { return tape_; }
  std::size_t id() const noexcept { return id_; }

  const DenseMatrix& value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

class BackwardContext;
using Backprop = std::function<void(BackwardContext&)>;

/// Gradient of a scalar with respect to every node that requires one.
class Gradients {
 public:
  /// Gradient for a node; an all-zero matrix of the node's shape when the
  /// node was not reached from the loss.
  DenseMatrix operator[](Var v) const;

 private:
  friend class Tape;
  const Tape* tape_ = nullptr;
  std::vector<std::unique_ptr<DenseMatrix>> grads_;
};

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(DenseMatrix value);
  /// A trainable leaf. Gradients are reported for it.
  Var parameter(DenseMatrix value);

  std::size_t size() const noexcept { return nodes_.size(); }
  const DenseMatrix& value(std::size_t id) const { return nodes_.at(id).value; }
  const std::string& op_name(std::size_t id) const { return nodes_.at(id).op; }
  bool requires_grad(std::size_t id) const { return nodes_.at(id).requires_grad; }
  bool is_parameter(std::size_t id) const { return nodes_.at(id).is_parameter; }

  /// Parameter leaves in creation order.
  std::vector<Var> parameters();

  /// Count of recorded nodes with the given op name.
  std::size_t count_ops(const std::string& op) const;

  /// Sweeps the tape backwards from a 1x1 loss node.
  /// Throws ContractViolation for a non-scalar loss and NumericError naming
  /// the operation when any forward value reached from the loss is non-finite.
  Gradients backward(Var loss) const;

  /// Records a node; used by the operation implementations.
  Var record(std::string op, DenseMatrix value, std::vector<std::size_t> inputs, Backprop fn);

 private:
  struct Node {
    std::string op;
    DenseMatrix value;
    std::vector<std::size_t> inputs;
    Backprop backprop;
    bool requires_grad = false;
    bool is_parameter = false;
  };

  std::vector<Node> nodes_;
};

class BackwardContext {
 public:
  const DenseMatrix& grad() const { return *grad_; }
  const DenseMatrix& value(std::size_t id) const { return tape_->value(id); }
  const DenseMatrix& out() const { return tape_->value(self_); }
  /// Accumulator for an input's gradient, or nullptr when that input does
  /// not require one.
  DenseMatrix* accum(std::size_t id);

 private:
  friend class Tape;
  const Tape* tape_ = nullptr;
  std::size_t self_ = 0;
  const DenseMatrix* grad_ = nullptr;
  std::vector<std::unique_ptr<DenseMatrix>>* grads_ = nullptr;
};

// Linear algebra.
Var matmul(Var a, Var b);
/// a * transpose(b)
Var matmul_nt(Var a, Var b);
/// Constant sparse operator applied to a differentiable dense operand.
Var spmm(std::shared_ptr<const SparseMatrix> adj, Var dense);
/// Sparse operator whose stored values are a differentiable nnz x 1 column.
/// Only the pattern of `pattern` is used.
Var spmm(std::shared_ptr<const SparseMatrix> pattern, Var values, Var dense);

// Elementwise arithmetic.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double s);
Var add_scalar(Var a, double s);
/// x (n x m) plus a 1 x m row broadcast over every row.
Var add_row_broadcast(Var x, Var row);

// Shape.
Var concat_cols(std::span<const Var> parts);
Var concat_rows(std::span<const Var> parts);
Var slice_cols(Var x, std::size_t start, std::size_t count);
Var gather_rows(Var x, std::vector<std::uint32_t> index);
/// out[index[i]] += x[i]; out has out_rows rows.
Var scatter_add_rows(Var x, std::vector<std::uint32_t> index, std::size_t out_rows);

// Nonlinearities.
Var sigmoid(Var x);
/// max(x, slope*x); the subgradient at 0 is the slope.
Var leaky_relu(Var x, double slope);
Var exp(Var x);
Var log(Var x);
Var softplus(Var x);
/// log(sigmoid(x)), evaluated stably.
Var log_sigmoid(Var x);
/// Row-wise log(sum(exp)), stabilized by the row maximum. n x m -> n x 1.
Var logsumexp_rows(Var x);
/// Scales every row to unit L2 norm. A zero-norm row raises NumericError.
Var normalize_rows(Var x);

// Reductions.
Var sum(Var x);
Var mean(Var x);
Var row_sum(Var x);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(Var a, Var b) { return mul(a, b); }
inline Var operator*(double s, Var a) { return scale(a, s); }

}  // namespace graphaug::ad
