#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "graphaug/autodiff.hpp"

namespace graphaug {

/// (user, positive item, negative item), item indices in [0, J).
struct Triplet3 {
  std::uint32_t user = 0;
  std::uint32_t positive = 0;
  std::uint32_t negative = 0;

  friend bool operator==(const Triplet3&, const Triplet3&) = default;
};

enum class LikelihoodViews { Both, First };

struct GibConfig {
  /// Lagrange weight on the compression (KL) term.
  double beta = 1.0;
  LikelihoodViews views = LikelihoodViews::Both;

  void validate() const;
};

/// Diagonal Gaussian per user: mean and standard deviation, each I x d/2.
struct GaussianPosterior {
  ad::Var mean;
  ad::Var stddev;
};

/// Mean-pools the user rows of the three encodings; the first d/2 columns
/// are the mean, softplus of the last d/2 (+1e-6) the standard deviation.
GaussianPosterior pool_posterior(ad::Var z, ad::Var z1, ad::Var z2, std::size_t users);

/// Mean over users of KL(N(mu, diag eta^2) || N(0, I)).
ad::Var kl_term(const GaussianPosterior& post);

/// Mean over triplets of -log sigmoid(z_u . z_pos - z_u . z_neg) on view
/// embeddings (items at rows users + j).
ad::Var pairwise_nll(ad::Var view, std::span<const Triplet3> batch, std::size_t users);

/// Ranking likelihood term, averaged over both views unless configured
/// to use only the first.
ad::Var likelihood_term(ad::Var z1, ad::Var z2, std::span<const Triplet3> batch, std::size_t users,
                        LikelihoodViews views = LikelihoodViews::Both);

struct GibTerms {
  ad::Var total;       ///< likelihood + beta * kl
  ad::Var likelihood;
  ad::Var kl;
};

GibTerms gib_loss(ad::Var z, ad::Var z1, ad::Var z2, std::span<const Triplet3> batch,
                  std::size_t users, const GibConfig& config);

}  // namespace graphaug
