#include "graphaug/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "graphaug/errors.hpp"

namespace graphaug::ad {

namespace {

std::string shape(const DenseMatrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

Tape& tape_of(Var a) {
  if (!a.valid()) throw ContractViolation("operation on an unbound Var");
  return *a.tape();
}

Tape& tape_of(Var a, Var b) {
  if (a.tape() != b.tape()) throw ContractViolation("operands recorded on different tapes");
  return tape_of(a);
}

void require_same_shape(const char* op, Var a, Var b) {
  if (!a.value().same_shape(b.value())) {
    throw ContractViolation(std::string(op) + ": shape mismatch " + shape(a.value()) + " vs " +
                            shape(b.value()));
  }
}

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double stable_softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

/// Shared body of unary elementwise ops: forward f, derivative df(x, y).
template <typename F, typename DF>
Var unary(const char* op, Var x, F f, DF df) {
  Tape& t = tape_of(x);
  const DenseMatrix& xv = x.value();
  DenseMatrix out(xv.rows(), xv.cols());
  for (std::size_t i = 0; i < xv.size(); ++i) out.values()[i] = f(xv.values()[i]);
  const std::size_t xi = x.id();
  return t.record(op, std::move(out), {xi}, [xi, df](BackwardContext& ctx) {
    DenseMatrix* gx = ctx.accum(xi);
    if (!gx) return;
    const auto& xs = ctx.value(xi).values();
    const auto& ys = ctx.out().values();
    const auto& g = ctx.grad().values();
    for (std::size_t i = 0; i < g.size(); ++i) gx->values()[i] += g[i] * df(xs[i], ys[i]);
  });
}

}  // namespace

const DenseMatrix& Var::value() const {
  if (!tape_) throw ContractViolation("value() on an unbound Var");
  return tape_->value(id_);
}

DenseMatrix Gradients::operator[](Var v) const {
  if (v.tape() != tape_) throw ContractViolation("Gradients queried with a foreign Var");
  if (v.id() < grads_.size() && grads_[v.id()]) return *grads_[v.id()];
  const DenseMatrix& val = v.value();
  return DenseMatrix(val.rows(), val.cols());
}

DenseMatrix* BackwardContext::accum(std::size_t id) {
  if (!tape_->requires_grad(id)) return nullptr;
  auto& slot = (*grads_)[id];
  if (!slot) {
    const DenseMatrix& v = tape_->value(id);
    slot = std::make_unique<DenseMatrix>(v.rows(), v.cols());
  }
  return slot.get();
}

Var Tape::constant(DenseMatrix value) { return record("constant", std::move(value), {}, {}); }

Var Tape::parameter(DenseMatrix value) {
  Var v = record("parameter", std::move(value), {}, {});
  nodes_.back().requires_grad = true;
  nodes_.back().is_parameter = true;
  return v;
}

std::vector<Var> Tape::parameters() {
  std::vector<Var> out;
  for (std::size_t i = 0; i < nodes_.size(); ++i)
    if (nodes_[i].is_parameter) out.push_back(Var(this, i));
  return out;
}

std::size_t Tape::count_ops(const std::string& op) const {
  return static_cast<std::size_t>(
      std::count_if(nodes_.begin(), nodes_.end(), [&](const Node& n) { return n.op == op; }));
}

Var Tape::record(std::string op, DenseMatrix value, std::vector<std::size_t> inputs, Backprop fn) {
  Node node;
  node.op = std::move(op);
  node.value = std::move(value);
  for (std::size_t in : inputs) {
    if (in >= nodes_.size()) throw ContractViolation("record: input refers to a later node");
    node.requires_grad = node.requires_grad || nodes_[in].requires_grad;
  }
  node.inputs = std::move(inputs);
  if (node.requires_grad) node.backprop = std::move(fn);
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Gradients Tape::backward(Var loss) const {
  if (loss.tape() != this) throw ContractViolation("backward: loss recorded on another tape");
  const DenseMatrix& lv = value(loss.id());
  if (lv.rows() != 1 || lv.cols() != 1) {
    throw ContractViolation("backward: loss must be 1x1, got " + shape(lv));
  }

  // Mark the nodes the loss depends on.
  std::vector<char> reached(loss.id() + 1, 0);
  reached[loss.id()] = 1;
  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    if (!reached[i]) continue;
    for (std::size_t in : nodes_[i].inputs) reached[in] = 1;
  }
  // Report the earliest offending node, where the non-finite value arose.
  for (std::size_t i = 0; i <= loss.id(); ++i) {
    if (reached[i] && !nodes_[i].value.all_finite()) {
      throw NumericError("non-finite forward value produced by '" + nodes_[i].op + "' (node " +
                         std::to_string(i) + ")");
    }
  }

  Gradients out;
  out.tape_ = this;
  out.grads_.resize(nodes_.size());
  if (!nodes_[loss.id()].requires_grad) return out;
  out.grads_[loss.id()] = std::make_unique<DenseMatrix>(1, 1, 1.0);

  BackwardContext ctx;
  ctx.tape_ = this;
  ctx.grads_ = &out.grads_;
  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    const Node& n = nodes_[i];
    if (!reached[i] || !n.backprop || !out.grads_[i]) continue;
    ctx.self_ = i;
    ctx.grad_ = out.grads_[i].get();
    n.backprop(ctx);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Linear algebra

Var matmul(Var a, Var b) {
  Tape& t = tape_of(a, b);
  DenseMatrix out = graphaug::matmul(a.value(), b.value());
  const std::size_t ai = a.id(), bi = b.id();
  return t.record("matmul", std::move(out), {ai, bi}, [ai, bi](BackwardContext& ctx) {
    const DenseMatrix& g = ctx.grad();
    if (DenseMatrix* ga = ctx.accum(ai)) *ga += graphaug::matmul(g, ctx.value(bi).transposed());
    if (DenseMatrix* gb = ctx.accum(bi)) *gb += graphaug::matmul(ctx.value(ai).transposed(), g);
  });
}

Var matmul_nt(Var a, Var b) {
  Tape& t = tape_of(a, b);
  const DenseMatrix& av = a.value();
  const DenseMatrix& bv = b.value();
  if (av.cols() != bv.cols()) {
    throw ContractViolation("matmul_nt: " + shape(av) + " times transpose of " + shape(bv));
  }
  DenseMatrix out(av.rows(), bv.rows());
  for (std::size_t i = 0; i < av.rows(); ++i) {
    const auto ar = av.row(i);
    for (std::size_t j = 0; j < bv.rows(); ++j) {
      const auto br = bv.row(j);
      double s = 0.0;
      for (std::size_t k = 0; k < ar.size(); ++k) s += ar[k] * br[k];
      out(i, j) = s;
    }
  }
  const std::size_t ai = a.id(), bi = b.id();
  return t.record("matmul_nt", std::move(out), {ai, bi}, [ai, bi](BackwardContext& ctx) {
    const DenseMatrix& g = ctx.grad();
    if (DenseMatrix* ga = ctx.accum(ai)) *ga += graphaug::matmul(g, ctx.value(bi));
    if (DenseMatrix* gb = ctx.accum(bi)) *gb += graphaug::matmul(g.transposed(), ctx.value(ai));
  });
}

Var spmm(std::shared_ptr<const SparseMatrix> adj, Var dense) {
  if (!adj) throw ContractViolation("spmm: null sparse operand");
  Tape& t = tape_of(dense);
  DenseMatrix out = adj->multiply(dense.value());
  const std::size_t di = dense.id();
  return t.record("spmm", std::move(out), {di}, [adj, di](BackwardContext& ctx) {
    if (DenseMatrix* gd = ctx.accum(di)) *gd += adj->multiply_transposed(adj->values(), ctx.grad());
  });
}

Var spmm(std::shared_ptr<const SparseMatrix> pattern, Var values, Var dense) {
  if (!pattern) throw ContractViolation("spmm: null sparse pattern");
  Tape& t = tape_of(values, dense);
  const DenseMatrix& vv = values.value();
  if (vv.cols() != 1 || vv.rows() != pattern->nnz()) {
    throw ContractViolation("spmm: values must be nnz x 1, got " + shape(vv));
  }
  DenseMatrix out = pattern->multiply(vv.values(), dense.value());
  const std::size_t vi = values.id(), di = dense.id();
  return t.record("spmm", std::move(out), {vi, di}, [pattern, vi, di](BackwardContext& ctx) {
    const DenseMatrix& g = ctx.grad();
    const auto& vals = ctx.value(vi).values();
    if (DenseMatrix* gd = ctx.accum(di)) *gd += pattern->multiply_transposed(vals, g);
    if (DenseMatrix* gv = ctx.accum(vi)) {
      const DenseMatrix& x = ctx.value(di);
      const auto& offsets = pattern->offsets();
      const auto& columns = pattern->columns();
      for (std::size_t r = 0; r < pattern->rows(); ++r) {
        const auto grow = g.row(r);
        for (std::size_t k = offsets[r]; k < offsets[r + 1]; ++k) {
          const auto xrow = x.row(columns[k]);
          double s = 0.0;
          for (std::size_t j = 0; j < grow.size(); ++j) s += grow[j] * xrow[j];
          gv->values()[k] += s;
        }
      }
    }
  });
}

// ---------------------------------------------------------------------------
// Elementwise arithmetic

Var add(Var a, Var b) {
  Tape& t = tape_of(a, b);
  require_same_shape("add", a, b);
  DenseMatrix out = a.value();
  out += b.value();
  const std::size_t ai = a.id(), bi = b.id();
  return t.record("add", std::move(out), {ai, bi}, [ai, bi](BackwardContext& ctx) {
    if (DenseMatrix* ga = ctx.accum(ai)) *ga += ctx.grad();
    if (DenseMatrix* gb = ctx.accum(bi)) *gb += ctx.grad();
  });
}

Var sub(Var a, Var b) {
  Tape& t = tape_of(a, b);
  require_same_shape("subtract", a, b);
  DenseMatrix out = a.value();
  const auto& bv = b.value().values();
  for (std::size_t i = 0; i < bv.size(); ++i) out.values()[i] -= bv[i];
  const std::size_t ai = a.id(), bi = b.id();
  return t.record("subtract", std::move(out), {ai, bi}, [ai, bi](BackwardContext& ctx) {
    if (DenseMatrix* ga = ctx.accum(ai)) *ga += ctx.grad();
    if (DenseMatrix* gb = ctx.accum(bi)) {
      const auto& g = ctx.grad().values();
      for (std::size_t i = 0; i < g.size(); ++i) gb->values()[i] -= g[i];
    }
  });
}

Var mul(Var a, Var b) {
  Tape& t = tape_of(a, b);
  require_same_shape("multiply", a, b);
  DenseMatrix out = a.value();
  const auto& bv = b.value().values();
  for (std::size_t i = 0; i < bv.size(); ++i) out.values()[i] *= bv[i];
  const std::size_t ai = a.id(), bi = b.id();
  return t.record("multiply", std::move(out), {ai, bi}, [ai, bi](BackwardContext& ctx) {
    const auto& g = ctx.grad().values();
    if (DenseMatrix* ga = ctx.accum(ai)) {
      const auto& bs = ctx.value(bi).values();
      for (std::size_t i = 0; i < g.size(); ++i) ga->values()[i] += g[i] * bs[i];
    }
    if (DenseMatrix* gb = ctx.accum(bi)) {
      const auto& as = ctx.value(ai).values();
      for (std::size_t i = 0; i < g.size(); ++i) gb->values()[i] += g[i] * as[i];
    }
  });
}

Var scale(Var a, double s) {
  return unary("scale", a, [s](double x) { return s * x; }, [s](double, double) { return s; });
}

Var add_scalar(Var a, double s) {
  return unary("add_scalar", a, [s](double x) { return x + s; }, [](double, double) { return 1.0; });
}

Var add_row_broadcast(Var x, Var row) {
  Tape& t = tape_of(x, row);
  const DenseMatrix& rv = row.value();
  if (rv.rows() != 1 || rv.cols() != x.cols()) {
    throw ContractViolation("add_row_broadcast: row " + shape(rv) + " for " + shape(x.value()));
  }
  DenseMatrix out = x.value();
  for (std::size_t r = 0; r < out.rows(); ++r)
    for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) += rv(0, c);
  const std::size_t xi = x.id(), ri = row.id();
  return t.record("add", std::move(out), {xi, ri}, [xi, ri](BackwardContext& ctx) {
    const DenseMatrix& g = ctx.grad();
    if (DenseMatrix* gx = ctx.accum(xi)) *gx += g;
    if (DenseMatrix* gr = ctx.accum(ri)) {
      for (std::size_t r = 0; r < g.rows(); ++r)
        for (std::size_t c = 0; c < g.cols(); ++c) (*gr)(0, c) += g(r, c);
    }
  });
}

// ---------------------------------------------------------------------------
// Shape

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw ContractViolation("concat_cols: no operands");
  Tape& t = tape_of(parts.front());
  const std::size_t rows = parts.front().rows();
  std::size_t cols = 0;
  std::vector<std::size_t> ids;
  for (Var p : parts) {
    tape_of(parts.front(), p);
    if (p.rows() != rows) throw ContractViolation("concat_cols: row count mismatch");
    cols += p.cols();
    ids.push_back(p.id());
  }
  DenseMatrix out(rows, cols);
  std::size_t off = 0;
  for (Var p : parts) {
    const DenseMatrix& v = p.value();
    for (std::size_t r = 0; r < rows; ++r)
      std::copy(v.row(r).begin(), v.row(r).end(), out.row(r).begin() + static_cast<std::ptrdiff_t>(off));
    off += v.cols();
  }
  return t.record("concat_cols", std::move(out), ids, [ids](BackwardContext& ctx) {
    const DenseMatrix& g = ctx.grad();
    std::size_t off = 0;
    for (std::size_t id : ids) {
      const std::size_t w = ctx.value(id).cols();
      if (DenseMatrix* gp = ctx.accum(id)) {
        for (std::size_t r = 0; r < g.rows(); ++r)
          for (std::size_t c = 0; c < w; ++c) (*gp)(r, c) += g(r, off + c);
      }
      off += w;
    }
  });
}

Var concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw ContractViolation("concat_rows: no operands");
  Tape& t = tape_of(parts.front());
  const std::size_t cols = parts.front().cols();
  std::size_t rows = 0;
  std::vector<std::size_t> ids;
  for (Var p : parts) {
    tape_of(parts.front(), p);
    if (p.cols() != cols) throw ContractViolation("concat_rows: column count mismatch");
    rows += p.rows();
    ids.push_back(p.id());
  }
  std::vector<double> values;
  values.reserve(rows * cols);
  for (Var p : parts) values.insert(values.end(), p.value().values().begin(), p.value().values().end());
  return t.record("concat_rows", DenseMatrix(rows, cols, std::move(values)), ids,
                  [ids](BackwardContext& ctx) {
                    const auto& g = ctx.grad().values();
                    std::size_t off = 0;
                    for (std::size_t id : ids) {
                      const std::size_t n = ctx.value(id).size();
                      if (DenseMatrix* gp = ctx.accum(id))
                        for (std::size_t i = 0; i < n; ++i) gp->values()[i] += g[off + i];
                      off += n;
                    }
                  });
}

Var slice_cols(Var x, std::size_t start, std::size_t count) {
  Tape& t = tape_of(x);
  const DenseMatrix& xv = x.value();
  if (start + count > xv.cols()) throw ContractViolation("slice_cols: range exceeds columns");
  DenseMatrix out(xv.rows(), count);
  for (std::size_t r = 0; r < xv.rows(); ++r)
    for (std::size_t c = 0; c < count; ++c) out(r, c) = xv(r, start + c);
  const std::size_t xi = x.id();
  return t.record("slice_cols", std::move(out), {xi}, [xi, start](BackwardContext& ctx) {
    if (DenseMatrix* gx = ctx.accum(xi)) {
      const DenseMatrix& g = ctx.grad();
      for (std::size_t r = 0; r < g.rows(); ++r)
        for (std::size_t c = 0; c < g.cols(); ++c) (*gx)(r, start + c) += g(r, c);
    }
  });
}

Var gather_rows(Var x, std::vector<std::uint32_t> index) {
  Tape& t = tape_of(x);
  const DenseMatrix& xv = x.value();
  DenseMatrix out(index.size(), xv.cols());
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i] >= xv.rows()) throw ContractViolation("gather_rows: index out of range");
    const auto src = xv.row(index[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  const std::size_t xi = x.id();
  return t.record("gather_rows", std::move(out), {xi},
                  [xi, index = std::move(index)](BackwardContext& ctx) {
                    DenseMatrix* gx = ctx.accum(xi);
                    if (!gx) return;
                    const DenseMatrix& g = ctx.grad();
                    for (std::size_t i = 0; i < index.size(); ++i) {
                      auto dst = gx->row(index[i]);
                      const auto src = g.row(i);
                      for (std::size_t c = 0; c < src.size(); ++c) dst[c] += src[c];
                    }
                  });
}

Var scatter_add_rows(Var x, std::vector<std::uint32_t> index, std::size_t out_rows) {
  Tape& t = tape_of(x);
  const DenseMatrix& xv = x.value();
  if (index.size() != xv.rows()) throw ContractViolation("scatter_add_rows: index length != rows");
  DenseMatrix out(out_rows, xv.cols());
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i] >= out_rows) throw ContractViolation("scatter_add_rows: index out of range");
    auto dst = out.row(index[i]);
    const auto src = xv.row(i);
    for (std::size_t c = 0; c < src.size(); ++c) dst[c] += src[c];
  }
  const std::size_t xi = x.id();
  return t.record("scatter_add_rows", std::move(out), {xi},
                  [xi, index = std::move(index)](BackwardContext& ctx) {
                    DenseMatrix* gx = ctx.accum(xi);
                    if (!gx) return;
                    const DenseMatrix& g = ctx.grad();
                    for (std::size_t i = 0; i < index.size(); ++i) {
                      auto dst = gx->row(i);
                      const auto src = g.row(index[i]);
                      for (std::size_t c = 0; c < src.size(); ++c) dst[c] += src[c];
                    }
                  });
}

// ---------------------------------------------------------------------------
// Nonlinearities

Var sigmoid(Var x) {
  return unary("sigmoid", x, stable_sigmoid, [](double, double y) { return y * (1.0 - y); });
}

Var leaky_relu(Var x, double slope) {
  if (!(slope >= 0.0 && slope <= 1.0)) throw ContractViolation("leaky_relu: slope outside [0,1]");
  return unary(
      "leaky_relu", x, [slope](double v) { return v > 0.0 ? v : slope * v; },
      [slope](double v, double) { return v > 0.0 ? 1.0 : slope; });
}

Var exp(Var x) {
  return unary("exp", x, [](double v) { return std::exp(v); }, [](double, double y) { return y; });
}

Var log(Var x) {
  return unary("log", x, [](double v) { return std::log(v); }, [](double v, double) { return 1.0 / v; });
}

Var softplus(Var x) {
  return unary("softplus", x, stable_softplus, [](double v, double) { return stable_sigmoid(v); });
}

Var log_sigmoid(Var x) {
  return unary(
      "log_sigmoid", x, [](double v) { return -stable_softplus(-v); },
      [](double v, double) { return stable_sigmoid(-v); });
}

Var logsumexp_rows(Var x) {
  Tape& t = tape_of(x);
  const DenseMatrix& xv = x.value();
  if (xv.cols() == 0) throw ContractViolation("logsumexp_rows: zero columns");
  DenseMatrix out(xv.rows(), 1);
  for (std::size_t r = 0; r < xv.rows(); ++r) {
    const auto row = xv.row(r);
    const double m = *std::max_element(row.begin(), row.end());
    if (!std::isfinite(m)) {
      out(r, 0) = m;
      continue;
    }
    double s = 0.0;
    for (double v : row) s += std::exp(v - m);
    out(r, 0) = m + std::log(s);
  }
  const std::size_t xi = x.id();
  return t.record("logsumexp", std::move(out), {xi}, [xi](BackwardContext& ctx) {
    DenseMatrix* gx = ctx.accum(xi);
    if (!gx) return;
    const DenseMatrix& xv = ctx.value(xi);
    const DenseMatrix& y = ctx.out();
    const DenseMatrix& g = ctx.grad();
    for (std::size_t r = 0; r < xv.rows(); ++r)
      for (std::size_t c = 0; c < xv.cols(); ++c)
        (*gx)(r, c) += g(r, 0) * std::exp(xv(r, c) - y(r, 0));
  });
}

Var normalize_rows(Var x) {
  Tape& t = tape_of(x);
  const DenseMatrix& xv = x.value();
  DenseMatrix out(xv.rows(), xv.cols());
  std::vector<double> norms(xv.rows());
  for (std::size_t r = 0; r < xv.rows(); ++r) {
    double s = 0.0;
    for (double v : xv.row(r)) s += v * v;
    const double n = std::sqrt(s);
    if (!(n > 0.0)) throw NumericError("normalize_rows: row " + std::to_string(r) + " has zero norm");
    norms[r] = n;
    for (std::size_t c = 0; c < xv.cols(); ++c) out(r, c) = xv(r, c) / n;
  }
  const std::size_t xi = x.id();
  return t.record("normalize_rows", std::move(out), {xi},
                  [xi, norms = std::move(norms)](BackwardContext& ctx) {
                    DenseMatrix* gx = ctx.accum(xi);
                    if (!gx) return;
                    const DenseMatrix& y = ctx.out();
                    const DenseMatrix& g = ctx.grad();
                    for (std::size_t r = 0; r < y.rows(); ++r) {
                      double dot = 0.0;
                      for (std::size_t c = 0; c < y.cols(); ++c) dot += g(r, c) * y(r, c);
                      for (std::size_t c = 0; c < y.cols(); ++c)
                        (*gx)(r, c) += (g(r, c) - y(r, c) * dot) / norms[r];
                    }
                  });
}

// ---------------------------------------------------------------------------
// Reductions

Var sum(Var x) {
  Tape& t = tape_of(x);
  double s = 0.0;
  for (double v : x.value().values()) s += v;
  const std::size_t xi = x.id();
  return t.record("sum", DenseMatrix::scalar(s), {xi}, [xi](BackwardContext& ctx) {
    if (DenseMatrix* gx = ctx.accum(xi)) {
      const double g = ctx.grad().item();
      for (double& v : gx->values()) v += g;
    }
  });
}

Var mean(Var x) {
  Tape& t = tape_of(x);
  const std::size_t n = x.value().size();
  if (n == 0) throw ContractViolation("mean: empty operand");
  double s = 0.0;
  for (double v : x.value().values()) s += v;
  const std::size_t xi = x.id();
  return t.record("mean", DenseMatrix::scalar(s / static_cast<double>(n)), {xi},
                  [xi, n](BackwardContext& ctx) {
                    if (DenseMatrix* gx = ctx.accum(xi)) {
                      const double g = ctx.grad().item() / static_cast<double>(n);
                      for (double& v : gx->values()) v += g;
                    }
                  });
}

Var row_sum(Var x) {
  Tape& t = tape_of(x);
  const DenseMatrix& xv = x.value();
  DenseMatrix out(xv.rows(), 1);
  for (std::size_t r = 0; r < xv.rows(); ++r) {
    double s = 0.0;
    for (double v : xv.row(r)) s += v;
    out(r, 0) = s;
  }
  const std::size_t xi = x.id();
  return t.record("row_sum", std::move(out), {xi}, [xi](BackwardContext& ctx) {
    if (DenseMatrix* gx = ctx.accum(xi)) {
      const DenseMatrix& g = ctx.grad();
      for (std::size_t r = 0; r < gx->rows(); ++r)
        for (std::size_t c = 0; c < gx->cols(); ++c) (*gx)(r, c) += g(r, 0);
    }
  });
}

}  // namespace graphaug::ad
