#pragma once

#include <memory>
#include <vector>

#include "graphaug/autodiff.hpp"
#include "graphaug/graph.hpp"
#include "graphaug/rng.hpp"
#include "graphaug/tensor.hpp"

namespace graphaug {

enum class Readout {
  LayerMean,  ///< mean of the input embeddings and every layer output
  LastLayer,
};

struct EncoderConfig {
  std::size_t dim = 32;
  std::size_t layers = 2;
  /// Hop set; each hop m contributes one block sigma(A^m X W_m).
  std::vector<int> hops{0, 1, 2};
  double slope = 0.5;
  Readout readout = Readout::LayerMean;

  /// Throws ConfigError unless hops is non-empty, unique, within [0,4] and
  /// no larger than dim.
  void validate() const;
  /// Width of hop block k. Blocks split dim as evenly as possible, the
  /// first dim % |hops| blocks one column wider (32 over 3 hops: 11, 11, 10).
  std::size_t block_width(std::size_t k) const {
    return dim / hops.size() + (k < dim % hops.size() ? 1 : 0);
  }
};

/// Trainable mixhop weights: weights[l][k] maps dim -> block_width(k) for hop
/// hops[k] of layer l.
struct EncoderParams {
  EncoderConfig config;
  std::vector<std::vector<DenseMatrix>> weights;

  /// Uniform in [-1/sqrt(dim), 1/sqrt(dim)].
  static EncoderParams init(const EncoderConfig& config, Rng& rng);
  void validate() const;
};

/// The same weights recorded as leaves on a tape.
struct EncoderVars {
  const EncoderConfig* config = nullptr;
  std::vector<std::vector<ad::Var>> weights;

  static EncoderVars bind(ad::Tape& tape, const EncoderParams& params);
};

/// Applies A (a fixed operator or a soft one whose values live on the tape)
/// to a dense operand. Powers are always iterated products, never formed.
class Propagator {
 public:
  static Propagator fixed(std::shared_ptr<const SparseMatrix> adj);
  static Propagator fixed(const NormalizedAdjacency& adj) { return fixed(adj.matrix); }
  static Propagator soft(std::shared_ptr<const SparseMatrix> pattern, ad::Var values);

  ad::Var apply(ad::Var x) const;
  std::size_t nodes() const { return matrix_->rows(); }
  const SparseMatrix& matrix() const { return *matrix_; }

 private:
  std::shared_ptr<const SparseMatrix> matrix_;
  ad::Var values_;
  bool soft_ = false;
};

struct EncodedViews {
  ad::Var embeddings;         ///< (I+J) x dim readout
  std::vector<ad::Var> layers;  ///< per-layer outputs H^(1..L)
};

/// Mixhop encoding: per layer, H^(l+1) = leaky_relu(|| over m of A^m H^(l) W_m^(l)).
EncodedViews encode(const Propagator& adj, ad::Var h0, const EncoderVars& params);

/// Mean over unordered row pairs of (1 - cosine similarity). Requires at
/// least two rows; a zero-norm row raises NumericError naming it.
double mad(const DenseMatrix& embeddings);

}  // namespace graphaug
