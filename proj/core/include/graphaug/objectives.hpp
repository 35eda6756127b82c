#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "graphaug/autodiff.hpp"
#include "graphaug/gib.hpp"

namespace graphaug {

/// InfoNCE over one node set: sum over rows i of
/// -log softmax_j(cos(a_i, b_j) / tau)[i]. Rows are L2-normalized first.
ad::Var infonce_block(ad::Var a, ad::Var b, double temperature);

/// Contrastive loss between two views: the user set and the item set are
/// contrasted separately and summed. Node indices are global rows
/// (items at users + j); each list is the denominator set of its type.
ad::Var infonce(ad::Var h1, ad::Var h2, std::span<const std::uint32_t> user_rows,
                std::span<const std::uint32_t> item_rows, double temperature);

/// Sum over triplets of -log sigmoid(pos - neg) for precomputed score columns.
ad::Var bpr(ad::Var positive_scores, ad::Var negative_scores);

/// BPR on dot-product scores of a single embedding table.
ad::Var bpr(ad::Var embeddings, std::span<const Triplet3> batch, std::size_t users);

struct LossWeights {
  double gib = 1e-5;              ///< beta1
  double contrastive = 1.0;       ///< beta2
  double regularization = 1e-7;   ///< beta3
};

/// L_BPR + beta1 * L_GIB + beta2 * L_CL + beta3 * sum ||theta||_F^2.
/// Invalid (default) Vars for gib/cl mean that term is absent.
ad::Var joint_loss(ad::Var bpr_loss, ad::Var gib_loss, ad::Var cl_loss,
                   std::span<const ad::Var> params, const LossWeights& weights);

/// Sum of squared Frobenius norms.
ad::Var squared_norm(std::span<const ad::Var> params);

}  // namespace graphaug
