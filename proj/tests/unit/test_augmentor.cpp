#include <cmath>
#include <queue>
#include <random>
#include <set>

#include "doctest.h"
#include "gradcheck.hpp"
#include "graphaug/augmentor.hpp"
#include "graphaug/errors.hpp"
#include "graphaug/synthetic.hpp"

using namespace graphaug;
using gradcheck::random_matrix;

namespace {

AugmentorParams make_params(std::size_t dim, AugmentorConfig cfg = {}, std::uint64_t seed = 1) {
  Rng rng(seed);
  return AugmentorParams::init(dim, cfg, rng);
}

// Unweighted distances from a user node over the bipartite graph.
std::vector<int> bfs(const InteractionGraph& g, std::uint32_t user) {
  const std::size_t n = g.node_count();
  std::vector<std::vector<std::size_t>> nbr(n);
  for (const Edge& e : g.edges()) {
    nbr[e.user].push_back(g.user_count() + e.item);
    nbr[g.user_count() + e.item].push_back(e.user);
  }
  std::vector<int> dist(n, -1);
  std::queue<std::size_t> q;
  dist[user] = 0;
  q.push(user);
  while (!q.empty()) {
    const std::size_t x = q.front();
    q.pop();
    for (std::size_t y : nbr[x])
      if (dist[y] < 0) {
        dist[y] = dist[x] + 1;
        q.push(y);
      }
  }
  return dist;
}

}  // namespace

TEST_SUITE("augmentor") {
  TEST_CASE("observed candidates") {
    const auto g = make_random_graph(10, 10, 30, 1);
    CHECK(candidate_edges(g, CandidatePolicy::Observed) == g.edges());
    CHECK_THROWS_AS(candidate_edges(g, CandidatePolicy::TwoHop, 1.5), ConfigError);
    CHECK_THROWS_AS(candidate_edges(InteractionGraph(2, 2, {}), CandidatePolicy::Observed), ContractViolation);
  }

  TEST_CASE("extended candidates: count, novelty and BFS reachability") {
    const auto g = make_random_graph(20, 20, 100, 4);
    const auto c = candidate_edges(g, CandidatePolicy::TwoHop, 0.1, 9);
    REQUIRE(c.size() == 110);
    std::set<Edge> extra(c.begin() + 100, c.end());
    CHECK(extra.size() == 10);
    for (const Edge& e : extra) {
      CHECK_FALSE(g.contains(e.user, e.item));
      // one user-user hop beyond the direct neighbourhood
      CHECK(bfs(g, e.user)[g.user_count() + e.item] == 3);
    }
    CHECK(candidate_edges(g, CandidatePolicy::TwoHop, 0.1, 9) == c);
  }

  TEST_CASE("mask keep rate 1 leaves embeddings, 0 leaves pure noise") {
    const auto g = make_random_graph(4, 4, 8, 2);
    std::mt19937_64 rng(2);
    const DenseMatrix hbar = random_matrix(8, 4, rng);
    for (double rho : {1.0, 0.0}) {
      AugmentorConfig cfg;
      cfg.keep_probability = rho;
      const auto p = make_params(4, cfg);
      ad::Tape t;
      const auto noise = NodePerturbation::draw(8, 4, rho, 5);
      const auto probs = edge_probability(t.constant(hbar), g.edges(), 4, AugmentorVars::bind(t, p), noise);
      CHECK(probs.perturbed.value() == (rho == 1.0 ? hbar : noise.noise));
    }
  }

  TEST_CASE("probabilities strictly inside (0,1) on 1000 random edges") {
    const auto g = make_random_graph(50, 50, 1000, 3);
    const auto p = make_params(8);
    std::mt19937_64 rng(3);
    ad::Tape t;
    const auto probs = edge_probability(t.constant(random_matrix(100, 8, rng)), g.edges(), 50,
                                        AugmentorVars::bind(t, p), std::uint64_t{4});
    REQUIRE(probs.probability.rows() == 1000);
    for (double v : probs.probability.value().values()) CHECK((v > 0.0 && v < 1.0));
  }

  TEST_CASE("noise 0.5 at unit temperature returns p") {
    const auto g = make_random_graph(5, 5, 12, 7);
    std::mt19937_64 rng(7);
    ad::Tape t;
    DenseMatrix pv(12, 1);
    std::uniform_real_distribution<double> unit(0.01, 0.99);
    for (double& v : pv.values()) v = unit(rng);
    const std::vector<double> half(12, 0.5);
    AugmentorConfig cfg;
    cfg.temperature = 1.0;
    const auto view = sample_view(t.constant(pv), g.edges(), 5, 5, cfg, half);
    for (std::size_t k = 0; k < 12; ++k) CHECK(std::abs(view.soft.value()(k, 0) - pv(k, 0)) < 1e-12);
  }

  TEST_CASE("probability near 1 is always kept; invalid p rejected") {
    const InteractionGraph g(1, 1, {{0, 0}});
    ad::Tape t;
    const std::vector<double> noise{1e-6};
    const auto view = sample_view(t.constant(DenseMatrix(1, 1, 1.0 - 1e-12)), g.edges(), 1, 1, {}, noise);
    CHECK(view.kept[0]);
    CHECK(view.soft.value()(0, 0) > 0.9);
    CHECK_THROWS_AS(sample_view(t.constant(DenseMatrix(1, 1, 1.0)), g.edges(), 1, 1, {}, noise),
                    ContractViolation);
    CHECK_THROWS_AS(sample_view(t.constant(DenseMatrix(1, 1, 0.0)), g.edges(), 1, 1, {}, noise),
                    ContractViolation);
  }

  TEST_CASE("thresholding, monotonicity and determinism") {
    const auto g = make_random_graph(10, 10, 40, 8);
    std::mt19937_64 rng(8);
    DenseMatrix pv(40, 1);
    std::uniform_real_distribution<double> unit(0.05, 0.95);
    for (double& v : pv.values()) v = unit(rng);
    AugmentorConfig cfg;
    cfg.threshold = 0.4;
    cfg.temperature = 0.7;
    ad::Tape t;
    const auto a = sample_view(t.constant(pv), g.edges(), 10, 10, cfg, std::uint64_t{3});
    const auto b = sample_view(t.constant(pv), g.edges(), 10, 10, cfg, std::uint64_t{3});
    CHECK(a.kept == b.kept);
    CHECK(a.soft.value() == b.soft.value());
    for (std::size_t k = 0; k < 40; ++k) {
      const double s = a.soft.value()(k, 0);
      CHECK(bool(a.kept[k]) == (s > 0.4));
      CHECK(a.weight[k] == (a.kept[k] ? s : 0.0));
    }
    CHECK(a.kept_edges.size() == static_cast<std::size_t>(std::count(a.kept.begin(), a.kept.end(), 1)));

    const std::vector<double> fixed(1, 0.3);
    double prev = 0.0;
    for (double p = 0.05; p < 1.0; p += 0.05) {
      ad::Tape tp;
      const InteractionGraph one(1, 1, {{0, 0}});
      const double s = sample_view(tp.constant(DenseMatrix(1, 1, p)), one.edges(), 1, 1, cfg, fixed)
                           .soft.value()(0, 0);
      CHECK(s > prev);
      prev = s;
    }
  }

  TEST_CASE("view adjacency is the normalized soft kept graph") {
    const auto g = make_random_graph(4, 4, 9, 10);
    std::mt19937_64 rng(10);
    DenseMatrix pv(9, 1);
    std::uniform_real_distribution<double> unit(0.1, 0.9);
    for (double& v : pv.values()) v = unit(rng);
    ad::Tape t;
    const auto view = sample_view(t.constant(pv), g.edges(), 4, 4, {}, std::uint64_t{2});
    DenseMatrix a(8, 8);
    for (std::size_t i = 0; i < 8; ++i) a(i, i) = 1.0;
    for (std::size_t k = 0; k < 9; ++k) {
      const Edge& e = g.edges()[k];
      a(e.user, 4 + e.item) = a(4 + e.item, e.user) = view.weight[k];
    }
    std::vector<double> deg(8, 0.0);
    for (std::size_t i = 0; i < 8; ++i)
      for (std::size_t j = 0; j < 8; ++j) deg[i] += a(i, j);
    const DenseMatrix got = view.adjacency().to_dense();
    for (std::size_t i = 0; i < 8; ++i)
      for (std::size_t j = 0; j < 8; ++j)
        CHECK(std::abs(got(i, j) - a(i, j) / std::sqrt(deg[i] * deg[j])) < 1e-14);
  }

  TEST_CASE("empirical keep rate matches the logistic tail") {
    std::vector<Edge> all;
    for (std::uint32_t u = 0; u < 400; ++u)
      for (std::uint32_t v = 0; v < 250; ++v) all.push_back({u, v});
    const InteractionGraph g(400, 250, all);
    const double p = 0.7, tau = 0.5, xi = 0.4;
    AugmentorConfig cfg;
    cfg.temperature = tau;
    cfg.threshold = xi;
    ad::Tape t;
    const auto view = sample_view(t.constant(DenseMatrix(all.size(), 1, p)), g.edges(), 400, 250, cfg,
                                  std::uint64_t{77});
    const double n = static_cast<double>(all.size());
    const double rate = static_cast<double>(view.kept_edges.size()) / n;
    const double q = keep_probability(p, tau, xi);
    CHECK(std::abs(rate - q) < 3 * std::sqrt(q * (1 - q) / n));
    CHECK(keep_probability(p, tau, 0.0) == 1.0);
  }

  TEST_CASE("gradients reach the scorer through frozen noise") {
    const auto g = make_random_graph(3, 3, 5, 11);
    std::mt19937_64 rng(11);
    const DenseMatrix hbar = random_matrix(6, 4, rng);
    const DenseMatrix h0 = random_matrix(6, 4, rng);
    AugmentorConfig cfg;
    cfg.threshold = 0.0;
    cfg.keep_probability = 0.5;
    cfg.temperature = 0.8;
    const auto params = make_params(4, cfg, 3);
    const auto noise = NodePerturbation::draw(6, 4, 0.5, 12);
    const auto uniform = draw_uniform_noise(5, 13);

    auto scorer = [&](const std::vector<ad::Var>& v) {
      AugmentorVars av;
      av.config = &params.config;
      av.w1 = v[1];
      av.b1 = v[2];
      av.w2 = v[3];
      av.b2 = v[4];
      const auto probs = edge_probability(v[0], g.edges(), 3, av, noise);
      return sample_view(probs.probability, g.edges(), 3, 3, cfg, uniform);
    };
    const std::vector<DenseMatrix> inputs{hbar, params.w1, params.b1, params.w2, params.b2};
    const auto soft = gradcheck::check(inputs, [&](ad::Tape&, const auto& v) { return ad::mean(scorer(v).soft); });
    CHECK(soft.ok());
    const auto through = gradcheck::check(inputs, [&](ad::Tape& t, const auto& v) {
      const auto view = scorer(v);
      ad::Var y = view.propagator().apply(view.propagator().apply(t.constant(h0)));
      return ad::sum(ad::mul(y, y));
    });
    CHECK(through.ok());
  }
}
