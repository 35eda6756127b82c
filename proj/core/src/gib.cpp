#include "graphaug/gib.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "graphaug/errors.hpp"

namespace graphaug {

void GibConfig::validate() const {
  if (!(beta >= 0.0)) throw ConfigError("gib: beta must be non-negative");
}

GaussianPosterior pool_posterior(ad::Var z, ad::Var z1, ad::Var z2, std::size_t users) {
  if (!z.value().same_shape(z1.value()) || !z.value().same_shape(z2.value()))
    throw ContractViolation("pool_posterior: views differ in shape");
  const std::size_t d = z.cols();
  if (d % 2 != 0) throw ConfigError("pool_posterior: embedding width " + std::to_string(d) + " is odd");
  if (users == 0 || users > z.rows()) throw ContractViolation("pool_posterior: bad user count");

  std::vector<std::uint32_t> user_rows(users);
  std::iota(user_rows.begin(), user_rows.end(), 0u);
  ad::Var pooled = ad::scale(
      ad::add(ad::add(ad::gather_rows(z, user_rows), ad::gather_rows(z1, user_rows)),
              ad::gather_rows(z2, user_rows)),
      1.0 / 3.0);
  GaussianPosterior post;
  post.mean = ad::slice_cols(pooled, 0, d / 2);
  post.stddev = ad::add_scalar(ad::softplus(ad::slice_cols(pooled, d / 2, d / 2)), 1e-6);
  return post;
}

ad::Var kl_term(const GaussianPosterior& post) {
  const DenseMatrix& eta = post.stddev.value();
  if (!post.mean.value().same_shape(eta)) throw ContractViolation("kl_term: mean/stddev shape mismatch");
  for (double v : eta.values()) {
    if (!std::isfinite(v)) throw NumericError("kl_term: non-finite standard deviation");
    if (!(v > 0.0)) throw ContractViolation("kl_term: standard deviation must be positive");
  }
  // 0.5 * sum(mu^2 + eta^2 - 1 - 2 log eta) per user, averaged over users.
  ad::Var mu2 = ad::mul(post.mean, post.mean);
  ad::Var eta2 = ad::mul(post.stddev, post.stddev);
  ad::Var inner = ad::sub(ad::add_scalar(ad::add(mu2, eta2), -1.0), ad::scale(ad::log(post.stddev), 2.0));
  const double users = static_cast<double>(eta.rows());
  return ad::scale(ad::sum(inner), 0.5 / users);
}

ad::Var pairwise_nll(ad::Var view, std::span<const Triplet3> batch, std::size_t users) {
  if (batch.empty()) throw ContractViolation("pairwise_nll: empty batch");
  std::vector<std::uint32_t> u, pos, neg;
  for (const Triplet3& t : batch) {
    if (t.user >= users || users + t.positive >= view.rows() || users + t.negative >= view.rows())
      throw ContractViolation("pairwise_nll: triplet index out of range");
    u.push_back(t.user);
    pos.push_back(static_cast<std::uint32_t>(users + t.positive));
    neg.push_back(static_cast<std::uint32_t>(users + t.negative));
  }
  ad::Var hu = ad::gather_rows(view, std::move(u));
  ad::Var gap = ad::row_sum(ad::mul(hu, ad::sub(ad::gather_rows(view, std::move(pos)),
                                                ad::gather_rows(view, std::move(neg)))));
  return ad::scale(ad::mean(ad::log_sigmoid(gap)), -1.0);
}

ad::Var likelihood_term(ad::Var z1, ad::Var z2, std::span<const Triplet3> batch, std::size_t users,
                        LikelihoodViews views) {
  ad::Var first = pairwise_nll(z1, batch, users);
  if (views == LikelihoodViews::First) return first;
  return ad::scale(ad::add(first, pairwise_nll(z2, batch, users)), 0.5);
}

GibTerms gib_loss(ad::Var z, ad::Var z1, ad::Var z2, std::span<const Triplet3> batch,
                  std::size_t users, const GibConfig& config) {
  config.validate();
  GibTerms t;
  t.likelihood = likelihood_term(z1, z2, batch, users, config.views);
  t.kl = kl_term(pool_posterior(z, z1, z2, users));
  t.total = ad::add(t.likelihood, ad::scale(t.kl, config.beta));
  return t;
}

}  // namespace graphaug
