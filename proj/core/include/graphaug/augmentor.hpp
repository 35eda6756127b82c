#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "graphaug/autodiff.hpp"
#include "graphaug/encoder.hpp"
#include "graphaug/graph.hpp"
#include "graphaug/rng.hpp"

namespace graphaug {

enum class CandidatePolicy {
  Observed,  ///< exactly the observed interactions
  TwoHop,    ///< observed plus sampled second-order collaborative pairs
};

/// Edges the augmentor may emit. With TwoHop, floor(budget * E) pairs (u, v)
/// are added, drawn uniformly without replacement from the unobserved pairs
/// where v is an item of a user sharing an item with u (graph distance 3,
/// i.e. one user-user hop beyond the direct neighbourhood). Fewer are added
/// when fewer such pairs exist. Observed edges come first, in graph order.
std::vector<Edge> candidate_edges(const InteractionGraph& g, CandidatePolicy policy,
                                  double budget = 0.0, std::uint64_t seed = 0);

struct AugmentorConfig {
  /// Per-dimension Bernoulli keep probability of the node masks.
  double keep_probability = 0.8;
  /// Gumbel temperature.
  double temperature = 1.0;
  /// Soft weights at or below the threshold are dropped.
  double threshold = 0.2;
  double slope = 0.5;

  void validate() const;
};

/// Edge scorer MLP: [h_u || h_v] (2d) -> d (leaky-relu) -> 1 logit.
struct AugmentorParams {
  AugmentorConfig config;
  DenseMatrix w1, b1, w2, b2;

  static AugmentorParams init(std::size_t dim, const AugmentorConfig& config, Rng& rng);
};

struct AugmentorVars {
  const AugmentorConfig* config = nullptr;
  ad::Var w1, b1, w2, b2;

  static AugmentorVars bind(ad::Tape& tape, const AugmentorParams& params);
};

/// Node masks and Gaussian noise, one row per node.
struct NodePerturbation {
  DenseMatrix mask;
  DenseMatrix noise;

  static NodePerturbation draw(std::size_t nodes, std::size_t dim, double keep_probability,
                               std::uint64_t seed);
};

struct EdgeProbabilities {
  ad::Var perturbed;     ///< h * m + eps * (1 - m), (I+J) x d
  ad::Var probability;   ///< E x 1
  ad::Var logit;         ///< E x 1, the scorer's pre-sigmoid output
};

/// Per-edge presence probability sigma(MLP(h~_u || h~_v)). Items are rows
/// users..users+J-1 of `hbar`.
EdgeProbabilities edge_probability(ad::Var hbar, std::span<const Edge> edges, std::size_t users,
                                   const AugmentorVars& params, const NodePerturbation& noise);
EdgeProbabilities edge_probability(ad::Var hbar, std::span<const Edge> edges, std::size_t users,
                                   const AugmentorVars& params, std::uint64_t seed);

/// One sampled view of the candidate graph.
struct AugmentedView {
  std::vector<Edge> candidates;
  ad::Var soft;                   ///< a-bar per candidate, E x 1
  std::vector<char> kept;         ///< a-bar > threshold
  std::vector<double> weight;     ///< a' (a-bar when kept, else 0)
  std::vector<Edge> kept_edges;
  std::shared_ptr<const SparseMatrix> pattern;
  ad::Var values;                 ///< normalized soft adjacency values, nnz x 1
  std::uint64_t seed = 0;

  Propagator propagator() const { return Propagator::soft(pattern, values); }
  /// Current numeric value of the normalized soft adjacency.
  SparseMatrix adjacency() const;
};

/// Uniform(0,1) draws for the logistic noise, one per edge, never 0.
std::vector<double> draw_uniform_noise(std::size_t edges, std::uint64_t seed);

/// a-bar = sigma((logit(p) + logit(eps')) / tau1), thresholded at xi; the
/// kept edges define D^{-1/2}(A' + I)D^{-1/2} with A' carrying the soft
/// weights, so gradients reach the edge scorer through the view adjacency.
AugmentedView sample_view(ad::Var probability, std::span<const Edge> candidates, std::size_t users,
                          std::size_t items, const AugmentorConfig& config,
                          std::span<const double> uniform_noise);
AugmentedView sample_view(ad::Var probability, std::span<const Edge> candidates, std::size_t users,
                          std::size_t items, const AugmentorConfig& config, std::uint64_t seed);
/// Same sampling from the scorer logits directly, which stays finite when
/// sigmoid(logit) rounds to 0 or 1.
AugmentedView sample_view(const EdgeProbabilities& probs, std::span<const Edge> candidates,
                          std::size_t users, std::size_t items, const AugmentorConfig& config,
                          std::uint64_t seed);

/// Closed-form P(a-bar > xi) for a given p: the logistic tail
/// P(L > tau1 * logit(xi) - logit(p)) = 1 - sigmoid(tau1 * logit(xi) - logit(p)).
double keep_probability(double p, double temperature, double threshold);

}  // namespace graphaug
