#include <cmath>
#include <random>

#include "doctest.h"
#include "gradcheck.hpp"
#include "graphaug/encoder.hpp"
#include "graphaug/errors.hpp"
#include "graphaug/synthetic.hpp"

using namespace graphaug;
using gradcheck::random_matrix;

namespace {

EncoderParams params_with(EncoderConfig cfg, std::uint64_t seed) {
  Rng rng(seed);
  return EncoderParams::init(cfg, rng);
}

DenseMatrix run(const NormalizedAdjacency& adj, const DenseMatrix& h0, const EncoderParams& p) {
  ad::Tape t;
  return encode(Propagator::fixed(adj), t.constant(h0), EncoderVars::bind(t, p)).embeddings.value();
}

}  // namespace

TEST_SUITE("encoder") {
  TEST_CASE("config validation and block widths") {
    EncoderConfig c;
    CHECK(c.block_width(0) == 11);
    CHECK(c.block_width(1) == 11);
    CHECK(c.block_width(2) == 10);
    c.hops = {};
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c.hops = {1, 1};
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c.hops = {5};
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c.hops = {0, 1, 2};
    c.dim = 2;
    CHECK_THROWS_AS(c.validate(), ConfigError);
  }

  TEST_CASE("M={1}, identity weight, linear activation is plain propagation") {
    const auto g = make_random_graph(4, 5, 9, 2);
    const auto adj = normalize_adjacency(g);
    std::mt19937_64 rng(1);
    const DenseMatrix h0 = random_matrix(9, 4, rng);
    EncoderConfig cfg{4, 3, {1}, 1.0, Readout::LastLayer};
    EncoderParams p = params_with(cfg, 1);
    for (auto& layer : p.weights) layer[0] = DenseMatrix::identity(4);
    DenseMatrix want = h0;
    for (int l = 0; l < 3; ++l) want = adj.matrix->multiply(want);
    CHECK(run(adj, h0, p) == want);

    cfg.layers = 1;
    EncoderParams one = params_with(cfg, 1);
    one.weights[0][0] = DenseMatrix::identity(4);
    CHECK(run(adj, h0, one) == adj.matrix->multiply(h0));
  }

  TEST_CASE("zero hop-0 weight gives [0 | AX W1 | A^2 X W2] blocks") {
    const auto g = make_random_graph(4, 4, 7, 8);
    const auto adj = normalize_adjacency(g);
    std::mt19937_64 rng(3);
    const DenseMatrix x = random_matrix(8, 6, rng);
    EncoderConfig cfg{6, 1, {0, 1, 2}, 0.5, Readout::LastLayer};
    EncoderParams p = params_with(cfg, 4);
    p.weights[0][0] = DenseMatrix(6, 2, 0.0);
    const DenseMatrix out = run(adj, x, p);

    const DenseMatrix a = adj.matrix->to_dense();
    const DenseMatrix ax = matmul(a, x), a2x = matmul(matmul(a, a), x);
    const DenseMatrix b1 = matmul(ax, p.weights[0][1]), b2 = matmul(a2x, p.weights[0][2]);
    auto act = [](double v) { return v > 0 ? v : 0.5 * v; };
    for (std::size_t r = 0; r < 8; ++r) {
      CHECK(out(r, 0) == 0.0);
      CHECK(out(r, 1) == 0.0);
      for (std::size_t c = 0; c < 2; ++c) {
        CHECK(std::abs(out(r, 2 + c) - act(b1(r, c))) < 1e-10);
        CHECK(std::abs(out(r, 4 + c) - act(b2(r, c))) < 1e-10);
      }
    }
  }

  TEST_CASE("hop-2 iterated product equals dense matrix power") {
    const auto g = make_random_graph(4, 4, 8, 5);
    const auto adj = normalize_adjacency(g);
    std::mt19937_64 rng(6);
    const DenseMatrix h = random_matrix(8, 3, rng);
    const DenseMatrix iter = adj.matrix->multiply(adj.matrix->multiply(h));
    const DenseMatrix a = adj.matrix->to_dense();
    const DenseMatrix dense = matmul(matmul(a, a), h);
    for (std::size_t k = 0; k < iter.size(); ++k) CHECK(std::abs(iter.values()[k] - dense.values()[k]) < 1e-10);
  }

  TEST_CASE("only sparse products touch the adjacency") {
    const auto g = make_random_graph(5, 5, 10, 1);
    const auto adj = normalize_adjacency(g);
    EncoderConfig cfg{6, 2, {0, 1, 2}, 0.5, Readout::LayerMean};
    EncoderParams p = params_with(cfg, 2);
    ad::Tape t;
    std::mt19937_64 rng(2);
    encode(Propagator::fixed(adj), t.constant(random_matrix(10, 6, rng)), EncoderVars::bind(t, p));
    CHECK(t.count_ops("spmm") == 4);  // max hop 2, per layer
    for (std::size_t id = 0; id < t.size(); ++id) {
      const auto& v = t.value(id);
      CHECK_FALSE((v.rows() == 10 && v.cols() == 10));
    }
  }

  TEST_CASE("layer-mean readout averages input and layers") {
    const auto g = make_random_graph(3, 3, 5, 3);
    const auto adj = normalize_adjacency(g);
    EncoderConfig cfg{4, 2, {0, 1}, 0.5, Readout::LayerMean};
    EncoderParams p = params_with(cfg, 9);
    std::mt19937_64 rng(9);
    const DenseMatrix h0 = random_matrix(6, 4, rng);
    ad::Tape t;
    const auto views = encode(Propagator::fixed(adj), t.constant(h0), EncoderVars::bind(t, p));
    REQUIRE(views.layers.size() == 2);
    for (std::size_t k = 0; k < h0.size(); ++k) {
      const double want = (h0.values()[k] + views.layers[0].value().values()[k] +
                           views.layers[1].value().values()[k]) / 3.0;
      CHECK(std::abs(views.embeddings.value().values()[k] - want) < 1e-15);
    }
  }

  TEST_CASE("width mismatch is a configuration error") {
    const auto g = make_random_graph(3, 3, 5, 3);
    const auto adj = normalize_adjacency(g);
    EncoderParams p = params_with({4, 1, {0, 1}, 0.5, Readout::LayerMean}, 1);
    ad::Tape t;
    CHECK_THROWS_AS(encode(Propagator::fixed(adj), t.constant(DenseMatrix(6, 3)), EncoderVars::bind(t, p)),
                    ConfigError);
    p.weights[0][1] = DenseMatrix(4, 3);
    CHECK_THROWS_AS(EncoderVars::bind(t, p), ConfigError);
  }

  TEST_CASE("encoder gradients match finite differences") {
    const auto g = make_random_graph(4, 5, 8, 4);
    const auto adj = normalize_adjacency(g);
    const EncoderConfig cfg{6, 2, {0, 1, 2}, 0.5, Readout::LayerMean};
    EncoderParams p = params_with(cfg, 5);
    std::mt19937_64 rng(5);
    std::vector<DenseMatrix> inputs{random_matrix(9, 6, rng)};
    for (const auto& layer : p.weights)
      for (const auto& w : layer) inputs.push_back(w);
    const auto r = gradcheck::check(inputs, [&](ad::Tape&, const std::vector<ad::Var>& v) {
      EncoderVars ev;
      ev.config = &cfg;
      ev.weights = {{v[1], v[2], v[3]}, {v[4], v[5], v[6]}};
      ad::Var e = encode(Propagator::fixed(adj), v[0], ev).embeddings;
      return ad::sum(ad::mul(e, e));
    });
    CHECK(r.ok());
  }

  TEST_CASE("mad closed forms and brute force") {
    CHECK(mad(DenseMatrix(3, 2, {1, 2, 1, 2, 1, 2})) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(mad(DenseMatrix(2, 2, {1, 0, 0, 3})) == 1.0);
    std::mt19937_64 rng(12);
    const DenseMatrix x = random_matrix(4, 5, rng);
    double total = 0.0;
    int pairs = 0;
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t j = 0; j < 4; ++j) {
        if (i >= j) continue;
        double dot = 0, ni = 0, nj = 0;
        for (std::size_t c = 0; c < 5; ++c) {
          dot += x(i, c) * x(j, c);
          ni += x(i, c) * x(i, c);
          nj += x(j, c) * x(j, c);
        }
        total += 1.0 - dot / std::sqrt(ni * nj);
        ++pairs;
      }
    CHECK(std::abs(mad(x) - total / pairs) < 1e-12);
    try {
      mad(DenseMatrix(3, 2, {1, 0, 0, 0, 1, 1}));
      FAIL("expected NumericError");
    } catch (const NumericError& e) {
      CHECK(std::string(e.what()).find("row 1") != std::string::npos);
    }
    CHECK_THROWS_AS(mad(DenseMatrix(1, 2, 1.0)), ContractViolation);
  }
}
