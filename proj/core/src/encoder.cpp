#include "graphaug/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "graphaug/errors.hpp"

namespace graphaug {

void EncoderConfig::validate() const {
  if (dim == 0) throw ConfigError("encoder: dim must be positive");
  if (layers == 0) throw ConfigError("encoder: at least one layer required");
  if (hops.empty()) throw ConfigError("encoder: hop set is empty");
  if (std::set<int>(hops.begin(), hops.end()).size() != hops.size())
    throw ConfigError("encoder: duplicate hops");
  for (int m : hops)
    if (m < 0 || m > 4) throw ConfigError("encoder: hop " + std::to_string(m) + " outside [0,4]");
  if (hops.size() > dim) {
    throw ConfigError("encoder: " + std::to_string(hops.size()) + " hops exceed width " +
                      std::to_string(dim));
  }
  if (!(slope >= 0.0 && slope <= 1.0)) throw ConfigError("encoder: slope outside [0,1]");
}

EncoderParams EncoderParams::init(const EncoderConfig& config, Rng& rng) {
  config.validate();
  EncoderParams p;
  p.config = config;
  const double bound = 1.0 / std::sqrt(static_cast<double>(config.dim));
  std::uniform_real_distribution<double> dist(-bound, bound);
  p.weights.resize(config.layers);
  for (auto& layer : p.weights) {
    for (std::size_t k = 0; k < config.hops.size(); ++k) {
      DenseMatrix w(config.dim, config.block_width(k));
      for (double& v : w.values()) v = dist(rng);
      layer.push_back(std::move(w));
    }
  }
  return p;
}

void EncoderParams::validate() const {
  config.validate();
  if (weights.size() != config.layers) throw ConfigError("encoder: layer count mismatch");
  for (const auto& layer : weights) {
    if (layer.size() != config.hops.size()) throw ConfigError("encoder: hop count mismatch");
    for (std::size_t k = 0; k < layer.size(); ++k) {
      const DenseMatrix& w = layer[k];
      if (w.rows() != config.dim || w.cols() != config.block_width(k))
        throw ConfigError("encoder: hop-width mismatch with embedding width");
      if (!w.all_finite()) throw NumericError("encoder: non-finite weight");
    }
  }
}

EncoderVars EncoderVars::bind(ad::Tape& tape, const EncoderParams& params) {
  params.validate();
  EncoderVars v;
  v.config = &params.config;
  for (const auto& layer : params.weights) {
    auto& out = v.weights.emplace_back();
    for (const auto& w : layer) out.push_back(tape.parameter(w));
  }
  return v;
}

Propagator Propagator::fixed(std::shared_ptr<const SparseMatrix> adj) {
  if (!adj || adj->rows() != adj->cols()) throw ContractViolation("propagator: adjacency must be square");
  Propagator p;
  p.matrix_ = std::move(adj);
  return p;
}

Propagator Propagator::soft(std::shared_ptr<const SparseMatrix> pattern, ad::Var values) {
  if (!pattern || pattern->rows() != pattern->cols())
    throw ContractViolation("propagator: adjacency must be square");
  if (values.rows() != pattern->nnz() || values.cols() != 1)
    throw ContractViolation("propagator: soft values must be nnz x 1");
  Propagator p;
  p.matrix_ = std::move(pattern);
  p.values_ = values;
  p.soft_ = true;
  return p;
}

ad::Var Propagator::apply(ad::Var x) const {
  return soft_ ? ad::spmm(matrix_, values_, x) : ad::spmm(matrix_, x);
}

EncodedViews encode(const Propagator& adj, ad::Var h0, const EncoderVars& params) {
  if (!params.config) throw ContractViolation("encode: unbound encoder parameters");
  const EncoderConfig& cfg = *params.config;
  if (h0.rows() != adj.nodes())
    throw ContractViolation("encode: embedding rows do not match adjacency size");
  if (h0.cols() != cfg.dim) {
    throw ConfigError("encode: embedding width " + std::to_string(h0.cols()) +
                      " differs from configured width " + std::to_string(cfg.dim));
  }
  const int max_hop = *std::max_element(cfg.hops.begin(), cfg.hops.end());

  EncodedViews out;
  ad::Var x = h0;
  for (std::size_t l = 0; l < cfg.layers; ++l) {
    std::vector<ad::Var> powers{x};
    for (int m = 1; m <= max_hop; ++m) powers.push_back(adj.apply(powers.back()));
    std::vector<ad::Var> blocks;
    for (std::size_t k = 0; k < cfg.hops.size(); ++k)
      blocks.push_back(ad::matmul(powers[static_cast<std::size_t>(cfg.hops[k])], params.weights[l][k]));
    x = ad::leaky_relu(blocks.size() == 1 ? blocks.front() : ad::concat_cols(blocks), cfg.slope);
    out.layers.push_back(x);
  }

  if (cfg.readout == Readout::LastLayer) {
    out.embeddings = x;
  } else {
    ad::Var acc = h0;
    for (ad::Var layer : out.layers) acc = ad::add(acc, layer);
    out.embeddings = ad::scale(acc, 1.0 / static_cast<double>(cfg.layers + 1));
  }
  return out;
}

double mad(const DenseMatrix& embeddings) {
  const std::size_t n = embeddings.rows();
  if (n < 2) throw ContractViolation("mad: need at least two rows");
  std::vector<double> norms(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (double v : embeddings.row(i)) s += v * v;
    norms[i] = std::sqrt(s);
    if (!(norms[i] > 0.0)) throw NumericError("mad: row " + std::to_string(i) + " has zero norm");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto a = embeddings.row(i);
    for (std::size_t j = i + 1; j < n; ++j) {
      const auto b = embeddings.row(j);
      double dot = 0.0;
      for (std::size_t c = 0; c < a.size(); ++c) dot += a[c] * b[c];
      total += 1.0 - dot / (norms[i] * norms[j]);
    }
  }
  return total / (static_cast<double>(n) * static_cast<double>(n - 1) / 2.0);
}

}  // namespace graphaug
