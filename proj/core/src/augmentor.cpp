#include "graphaug/augmentor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "graphaug/errors.hpp"

namespace graphaug {

std::vector<Edge> candidate_edges(const InteractionGraph& g, CandidatePolicy policy, double budget,
                                  std::uint64_t seed) {
  if (g.empty()) throw ContractViolation("candidate_edges: empty graph");
  if (!(budget >= 0.0 && budget <= 1.0))
    throw ConfigError("candidate_edges: budget must lie in [0,1]");
  std::vector<Edge> out = g.edges();
  if (policy == CandidatePolicy::Observed) return out;

  const auto extra = static_cast<std::size_t>(std::floor(budget * static_cast<double>(g.edge_count())));
  if (extra == 0) return out;

  // users of each item
  std::vector<std::vector<std::uint32_t>> users_of(g.item_count());
  for (const Edge& e : g.edges()) users_of[e.item].push_back(e.user);

  std::vector<Edge> pool;
  std::vector<std::uint32_t> mark(g.item_count(), std::numeric_limits<std::uint32_t>::max());
  for (std::uint32_t u = 0; u < g.user_count(); ++u) {
    for (std::uint32_t v : g.items_of(u)) mark[v] = u;
    std::vector<std::uint32_t> reach;
    for (std::uint32_t v : g.items_of(u)) {
      for (std::uint32_t other : users_of[v]) {
        if (other == u) continue;
        for (std::uint32_t w : g.items_of(other)) {
          if (mark[w] == u) continue;
          mark[w] = u;
          reach.push_back(w);
        }
      }
    }
    std::sort(reach.begin(), reach.end());
    for (std::uint32_t w : reach) pool.push_back({u, w});
  }

  Rng rng = make_rng(seed, "candidates");
  std::vector<Edge> picked;
  std::sample(pool.begin(), pool.end(), std::back_inserter(picked), std::min(extra, pool.size()), rng);
  out.insert(out.end(), picked.begin(), picked.end());
  return out;
}

void AugmentorConfig::validate() const {
  if (!(keep_probability >= 0.0 && keep_probability <= 1.0))
    throw ConfigError("augmentor: keep probability outside [0,1]");
  if (!(temperature > 0.0)) throw ConfigError("augmentor: Gumbel temperature must be positive");
  if (!(threshold >= 0.0 && threshold < 1.0)) throw ConfigError("augmentor: threshold outside [0,1)");
  if (!(slope >= 0.0 && slope <= 1.0)) throw ConfigError("augmentor: slope outside [0,1]");
}

AugmentorParams AugmentorParams::init(std::size_t dim, const AugmentorConfig& config, Rng& rng) {
  config.validate();
  AugmentorParams p;
  p.config = config;
  auto fill = [&rng](DenseMatrix& m, std::size_t fan_in) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (double& v : m.values()) v = dist(rng);
  };
  p.w1 = DenseMatrix(2 * dim, dim);
  p.b1 = DenseMatrix(1, dim);
  p.w2 = DenseMatrix(dim, 1);
  p.b2 = DenseMatrix(1, 1);
  fill(p.w1, dim);
  fill(p.w2, dim);
  return p;
}

AugmentorVars AugmentorVars::bind(ad::Tape& tape, const AugmentorParams& params) {
  params.config.validate();
  AugmentorVars v;
  v.config = &params.config;
  v.w1 = tape.parameter(params.w1);
  v.b1 = tape.parameter(params.b1);
  v.w2 = tape.parameter(params.w2);
  v.b2 = tape.parameter(params.b2);
  return v;
}

NodePerturbation NodePerturbation::draw(std::size_t nodes, std::size_t dim, double keep_probability,
                                        std::uint64_t seed) {
  Rng mask_rng = make_rng(seed, "masks");
  Rng noise_rng = make_rng(seed, "node-noise");
  std::bernoulli_distribution keep(keep_probability);
  std::normal_distribution<double> normal(0.0, 1.0);
  NodePerturbation p{DenseMatrix(nodes, dim), DenseMatrix(nodes, dim)};
  for (double& v : p.mask.values()) v = keep(mask_rng) ? 1.0 : 0.0;
  for (double& v : p.noise.values()) v = normal(noise_rng);
  return p;
}

EdgeProbabilities edge_probability(ad::Var hbar, std::span<const Edge> edges, std::size_t users,
                                   const AugmentorVars& params, const NodePerturbation& noise) {
  if (!params.config) throw ContractViolation("edge_probability: unbound augmentor parameters");
  if (!noise.mask.same_shape(hbar.value()) || !noise.noise.same_shape(hbar.value()))
    throw ContractViolation("edge_probability: perturbation shape differs from embeddings");
  if (edges.empty()) throw ContractViolation("edge_probability: no candidate edges");
  ad::Tape& tape = *hbar.tape();

  ad::Var eps = tape.constant(noise.noise);
  ad::Var mask = tape.constant(noise.mask);
  DenseMatrix dropped = noise.mask;
  for (double& v : dropped.values()) v = 1.0 - v;
  ad::Var perturbed = ad::add(ad::mul(hbar, mask), ad::mul(eps, tape.constant(std::move(dropped))));

  std::vector<std::uint32_t> u_rows, v_rows;
  u_rows.reserve(edges.size());
  v_rows.reserve(edges.size());
  for (const Edge& e : edges) {
    u_rows.push_back(e.user);
    v_rows.push_back(static_cast<std::uint32_t>(users + e.item));
  }
  if (v_rows.empty() || *std::max_element(v_rows.begin(), v_rows.end()) >= hbar.rows())
    throw ContractViolation("edge_probability: item row outside embeddings");
  const ad::Var pair[] = {ad::gather_rows(perturbed, std::move(u_rows)),
                          ad::gather_rows(perturbed, std::move(v_rows))};
  ad::Var hidden = ad::leaky_relu(
      ad::add_row_broadcast(ad::matmul(ad::concat_cols(pair), params.w1), params.b1),
      params.config->slope);
  ad::Var logit = ad::add_row_broadcast(ad::matmul(hidden, params.w2), params.b2);
  return {perturbed, ad::sigmoid(logit), logit};
}

EdgeProbabilities edge_probability(ad::Var hbar, std::span<const Edge> edges, std::size_t users,
                                   const AugmentorVars& params, std::uint64_t seed) {
  if (!params.config) throw ContractViolation("edge_probability: unbound augmentor parameters");
  return edge_probability(
      hbar, edges, users, params,
      NodePerturbation::draw(hbar.rows(), hbar.cols(), params.config->keep_probability, seed));
}

std::vector<double> draw_uniform_noise(std::size_t edges, std::uint64_t seed) {
  Rng rng = make_rng(seed, "gumbel");
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> out(edges);
  for (double& v : out) {
    do v = unit(rng);
    while (v <= 0.0);
  }
  return out;
}

namespace {

AugmentedView sample_from_logit(ad::Var logit_p, std::span<const Edge> candidates, std::size_t users,
                                std::size_t items, const AugmentorConfig& config,
                                std::span<const double> uniform_noise) {
  config.validate();
  if (logit_p.cols() != 1 || logit_p.rows() != candidates.size())
    throw ContractViolation("sample_view: one probability per candidate edge required");
  if (uniform_noise.size() != candidates.size())
    throw ContractViolation("sample_view: one noise draw per candidate edge required");
  ad::Tape& tape = *logit_p.tape();

  DenseMatrix logistic(candidates.size(), 1);
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    const double e = uniform_noise[k];
    if (!(e > 0.0 && e < 1.0)) throw ContractViolation("sample_view: noise draw outside (0,1)");
    logistic(k, 0) = std::log(e) - std::log1p(-e);
  }
  ad::Var soft = ad::sigmoid(ad::scale(ad::add(logit_p, tape.constant(std::move(logistic))),
                                       1.0 / config.temperature));

  AugmentedView view;
  view.candidates.assign(candidates.begin(), candidates.end());
  view.soft = soft;
  view.kept.resize(candidates.size());
  view.weight.resize(candidates.size());
  std::vector<std::uint32_t> kept_index;
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    const double a = soft.value()(k, 0);
    view.kept[k] = a > config.threshold;
    view.weight[k] = view.kept[k] ? a : 0.0;
    if (view.kept[k]) {
      kept_index.push_back(static_cast<std::uint32_t>(k));
      view.kept_edges.push_back(candidates[k]);
    }
  }

  const std::size_t n = users + items;
  BipartitePattern bp = build_bipartite_pattern(users, items, view.kept_edges);
  view.pattern = bp.pattern;
  const std::size_t kept = view.kept_edges.size();
  if (kept == 0) {
    view.values = tape.constant(DenseMatrix(n, 1, 1.0));
    return view;
  }

  ad::Var w = ad::gather_rows(soft, std::move(kept_index));
  std::vector<std::uint32_t> endpoint(2 * kept), u_rows(kept), v_rows(kept);
  for (std::size_t k = 0; k < kept; ++k) {
    u_rows[k] = view.kept_edges[k].user;
    v_rows[k] = static_cast<std::uint32_t>(users + view.kept_edges[k].item);
    endpoint[k] = u_rows[k];
    endpoint[kept + k] = v_rows[k];
  }
  const ad::Var both[] = {w, w};
  ad::Var degree = ad::add_scalar(ad::scatter_add_rows(ad::concat_rows(both), std::move(endpoint), n), 1.0);
  ad::Var log_degree = ad::log(degree);
  ad::Var inv_sqrt = ad::exp(ad::scale(log_degree, -0.5));
  ad::Var off = ad::mul(ad::mul(w, ad::gather_rows(inv_sqrt, std::move(u_rows))),
                        ad::gather_rows(inv_sqrt, std::move(v_rows)));
  ad::Var diag = ad::exp(ad::scale(log_degree, -1.0));

  // Stacked as [upper entries; lower entries; diagonal] then permuted to CSR order.
  std::vector<std::uint32_t> order(bp.pattern->nnz());
  for (std::size_t k = 0; k < kept; ++k) {
    order[bp.upper[k]] = static_cast<std::uint32_t>(k);
    order[bp.lower[k]] = static_cast<std::uint32_t>(kept + k);
  }
  for (std::size_t i = 0; i < n; ++i) order[bp.diagonal[i]] = static_cast<std::uint32_t>(2 * kept + i);
  const ad::Var stacked[] = {off, off, diag};
  view.values = ad::gather_rows(ad::concat_rows(stacked), std::move(order));
  return view;
}

}  // namespace

AugmentedView sample_view(ad::Var probability, std::span<const Edge> candidates, std::size_t users,
                          std::size_t items, const AugmentorConfig& config,
                          std::span<const double> uniform_noise) {
  const DenseMatrix& pv = probability.value();
  if (pv.cols() != 1 || pv.rows() != candidates.size())
    throw ContractViolation("sample_view: one probability per candidate edge required");
  for (std::size_t k = 0; k < pv.rows(); ++k) {
    const double p = pv(k, 0);
    if (!(p > 0.0 && p < 1.0))
      throw ContractViolation("sample_view: probability " + std::to_string(p) + " outside (0,1)");
  }
  ad::Var logit_p = ad::sub(ad::log(probability), ad::log(ad::add_scalar(ad::scale(probability, -1.0), 1.0)));
  return sample_from_logit(logit_p, candidates, users, items, config, uniform_noise);
}

AugmentedView sample_view(ad::Var probability, std::span<const Edge> candidates, std::size_t users,
                          std::size_t items, const AugmentorConfig& config, std::uint64_t seed) {
  AugmentedView v = sample_view(probability, candidates, users, items, config,
                                draw_uniform_noise(candidates.size(), seed));
  v.seed = seed;
  return v;
}

AugmentedView sample_view(const EdgeProbabilities& probs, std::span<const Edge> candidates,
                          std::size_t users, std::size_t items, const AugmentorConfig& config,
                          std::uint64_t seed) {
  AugmentedView v = sample_from_logit(probs.logit, candidates, users, items, config,
                                      draw_uniform_noise(candidates.size(), seed));
  v.seed = seed;
  return v;
}

SparseMatrix AugmentedView::adjacency() const {
  SparseMatrix m = *pattern;
  m.values() = values.value().values();
  return m;
}

double keep_probability(double p, double temperature, double threshold) {
  const double logit = [](double x) { return std::log(x) - std::log1p(-x); }(p);
  if (threshold <= 0.0) return 1.0;
  const double cut = temperature * (std::log(threshold) - std::log1p(-threshold)) - logit;
  return 1.0 / (1.0 + std::exp(cut));
}

}  // namespace graphaug
