#include "graphaug/objectives.hpp"

#include "graphaug/errors.hpp"

namespace graphaug {

ad::Var infonce_block(ad::Var a, ad::Var b, double temperature) {
  if (!(temperature > 0.0)) throw ContractViolation("infonce: temperature must be positive");
  if (!a.value().same_shape(b.value())) throw ContractViolation("infonce: views differ in shape");
  ad::Var na = ad::normalize_rows(a);
  ad::Var nb = ad::normalize_rows(b);
  const double inv_t = 1.0 / temperature;
  ad::Var positive = ad::scale(ad::row_sum(ad::mul(na, nb)), inv_t);
  ad::Var denom = ad::logsumexp_rows(ad::scale(ad::matmul_nt(na, nb), inv_t));
  return ad::sum(ad::sub(denom, positive));
}

ad::Var infonce(ad::Var h1, ad::Var h2, std::span<const std::uint32_t> user_rows,
                std::span<const std::uint32_t> item_rows, double temperature) {
  if (!h1.value().same_shape(h2.value())) throw ContractViolation("infonce: views differ in shape");
  if (user_rows.empty() && item_rows.empty()) throw ContractViolation("infonce: empty node set");
  auto block = [&](std::span<const std::uint32_t> rows) {
    std::vector<std::uint32_t> idx(rows.begin(), rows.end());
    return infonce_block(ad::gather_rows(h1, idx), ad::gather_rows(h2, idx), temperature);
  };
  if (item_rows.empty()) return block(user_rows);
  if (user_rows.empty()) return block(item_rows);
  return ad::add(block(user_rows), block(item_rows));
}

ad::Var bpr(ad::Var positive_scores, ad::Var negative_scores) {
  if (positive_scores.rows() == 0) throw ContractViolation("bpr: empty batch");
  return ad::scale(ad::sum(ad::log_sigmoid(ad::sub(positive_scores, negative_scores))), -1.0);
}

ad::Var bpr(ad::Var embeddings, std::span<const Triplet3> batch, std::size_t users) {
  if (batch.empty()) throw ContractViolation("bpr: empty batch");
  std::vector<std::uint32_t> u, pos, neg;
  for (const Triplet3& t : batch) {
    if (t.user >= users || users + t.positive >= embeddings.rows() ||
        users + t.negative >= embeddings.rows())
      throw ContractViolation("bpr: triplet index out of range");
    u.push_back(t.user);
    pos.push_back(static_cast<std::uint32_t>(users + t.positive));
    neg.push_back(static_cast<std::uint32_t>(users + t.negative));
  }
  ad::Var hu = ad::gather_rows(embeddings, std::move(u));
  ad::Var sp = ad::row_sum(ad::mul(hu, ad::gather_rows(embeddings, std::move(pos))));
  ad::Var sn = ad::row_sum(ad::mul(hu, ad::gather_rows(embeddings, std::move(neg))));
  return bpr(sp, sn);
}

ad::Var squared_norm(std::span<const ad::Var> params) {
  if (params.empty()) throw ContractViolation("squared_norm: no parameters");
  ad::Var acc = ad::sum(ad::mul(params.front(), params.front()));
  for (std::size_t i = 1; i < params.size(); ++i) acc = ad::add(acc, ad::sum(ad::mul(params[i], params[i])));
  return acc;
}

ad::Var joint_loss(ad::Var bpr_loss, ad::Var gib_loss, ad::Var cl_loss,
                   std::span<const ad::Var> params, const LossWeights& weights) {
  ad::Var total = bpr_loss;
  if (gib_loss.valid() && weights.gib != 0.0) total = ad::add(total, ad::scale(gib_loss, weights.gib));
  if (cl_loss.valid() && weights.contrastive != 0.0)
    total = ad::add(total, ad::scale(cl_loss, weights.contrastive));
  if (!params.empty() && weights.regularization != 0.0)
    total = ad::add(total, ad::scale(squared_norm(params), weights.regularization));
  return total;
}

}  // namespace graphaug
