#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include "doctest.h"
#include "graphaug/errors.hpp"
#include "graphaug/eval.hpp"
#include "graphaug/synthetic.hpp"

using namespace graphaug;

namespace {

DenseMatrix rows_matrix(std::size_t rows, std::size_t cols, std::vector<double> v) {
  return DenseMatrix(rows, cols, std::move(v));
}

}  // namespace

TEST_SUITE("eval") {
  TEST_CASE("hand-enumerated recall and NDCG") {
    // user 0 ranks 1,2,3,4,5 (item 0 is a train item); user 1 ties everything
    // and falls back to index order 0,1,3,4,5; user 2 has no test items.
    const InteractionGraph train(3, 6, {{0, 0}, {1, 2}, {2, 4}});
    const TestSet test{{1, 3}, {5}, {}};
    const DenseMatrix scores = rows_matrix(3, 6,
                                           {9, 5, 4, 3, 2, 1,  //
                                            1, 1, 9, 1, 1, 1,  //
                                            0, 0, 0, 0, 0, 0});
    RankOptions opt;
    opt.ks = {2, 3, 5};
    opt.per_user = true;
    const auto rep = rank_scores(scores, train, test, opt);
    CHECK(rep.evaluated == 2);
    CHECK(rep.skipped == 1);
    const double idcg2 = 1.0 + 1.0 / std::log2(3.0);
    CHECK(rep.recall_at(2) == doctest::Approx(0.25));
    CHECK(rep.ndcg_at(2) == doctest::Approx((1.0 / idcg2) / 2.0));
    CHECK(rep.recall_at(3) == doctest::Approx(0.5));
    CHECK(rep.ndcg_at(3) == doctest::Approx((1.5 / idcg2) / 2.0));
    CHECK(rep.recall_at(5) == doctest::Approx(1.0));
    CHECK(rep.ndcg_at(5) == doctest::Approx((1.5 / idcg2 + 1.0 / std::log2(6.0)) / 2.0));
    REQUIRE(rep.per_user.size() == 2);
    CHECK(rep.per_user[1].user == 1);
    CHECK(rep.per_user[1].ndcg[2] == doctest::Approx(1.0 / std::log2(6.0)));
    CHECK_THROWS_AS(rep.recall_at(20), ContractViolation);
  }

  TEST_CASE("all hits and no hits") {
    const InteractionGraph train(1, 4, {{0, 0}});
    const TestSet test{{1, 2}};
    RankOptions opt;
    opt.ks = {2};
    const auto best = rank_scores(rows_matrix(1, 4, {0, 3, 2, 1}), train, test, opt);
    CHECK(best.recall_at(2) == 1.0);
    CHECK(best.ndcg_at(2) == doctest::Approx(1.0));
    const auto worst = rank_scores(rows_matrix(1, 4, {0, 1, 2, 3}), train, test, opt);
    CHECK(worst.recall_at(2) == doctest::Approx(0.5));
    const auto none = rank_scores(rows_matrix(1, 4, {9, 0, 0, 5}), InteractionGraph(1, 4, {{0, 3}}),
                                  TestSet{{2}}, RankOptions{{1}, false});
    CHECK(none.recall_at(1) == 0.0);
    CHECK(none.ndcg_at(1) == 0.0);
    CHECK_THROWS_AS(rank_scores(rows_matrix(1, 4, {0, 0, 0, 0}), train, TestSet{{}}), ContractViolation);
  }

  TEST_CASE("metrics depend only on the ordering") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> n01;
    const auto g = make_block_dataset({});
    const Split s = split(g, 0.2, 3);
    DenseMatrix a(g.user_count(), g.item_count());
    for (double& v : a.values()) v = n01(rng);
    DenseMatrix b = a;
    for (double& v : b.values()) v = std::exp(3.0 * v) + 1.0;
    const auto ra = rank_scores(a, s.train, s.test);
    const auto rb = rank_scores(b, s.train, s.test);
    CHECK(ra.recall == rb.recall);
    CHECK(ra.ndcg == rb.ndcg);
  }

  TEST_CASE("noise injection") {
    const auto g = make_block_dataset({});
    const auto noisy = inject_noise(g, 0.25, 8);
    CHECK(noisy.edge_count() == g.edge_count() + g.edge_count() / 4);
    std::set<Edge> orig(g.edges().begin(), g.edges().end());
    std::size_t added = 0;
    for (const Edge& e : noisy.edges()) added += orig.count(e) ? 0 : 1;
    CHECK(added == g.edge_count() / 4);
    for (const Edge& e : g.edges()) CHECK(noisy.contains(e.user, e.item));
    CHECK(inject_noise(g, 0.25, 8) == noisy);
    CHECK(inject_noise(g, 0.0, 8) == g);
    CHECK_THROWS_AS(inject_noise(g, 1.0, 8), ConfigError);
    CHECK_THROWS_AS(inject_noise(g, -0.1, 8), ConfigError);
    const InteractionGraph full(2, 2, {{0, 0}, {0, 1}, {1, 0}, {1, 1}});
    CHECK_THROWS_AS(inject_noise(full, 0.5, 1), ContractViolation);
  }

  TEST_CASE("group buckets follow the degree histogram") {
    BlockDatasetSpec spec;
    spec.blocks = 4;
    spec.min_interactions = 2;
    spec.max_interactions = 45;
    const auto g = make_block_dataset(spec);
    const Split s = split(g, 0.2, 1);
    DenseMatrix scores(g.user_count(), g.item_count());
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u01;
    for (double& v : scores.values()) v = u01(rng);

    const auto users = group_scores(scores, s.train, s.test, GroupAxis::User, kDefaultGroupBoundaries);
    std::vector<std::size_t> hist(5, 0), with_test(5, 0);
    for (std::uint32_t u = 0; u < s.train.user_count(); ++u) {
      const std::size_t d = s.train.user_degree(u);
      if (d < 50) {
        ++hist[d / 10];
        with_test[d / 10] += s.test[u].empty() ? 0 : 1;
      }
    }
    std::size_t bucket = 0;
    for (const auto& gr : users) {
      while (with_test[bucket] == 0) ++bucket;
      CHECK(gr.lower == 10 * bucket);
      CHECK(gr.label() == std::to_string(10 * bucket) + "-" + std::to_string(10 * bucket + 10));
      CHECK(gr.members == hist[bucket]);
      CHECK(gr.report.evaluated == with_test[bucket]);
      ++bucket;
    }

    // on the item axis the buckets partition the test hits
    const auto items = group_scores(scores, s.train, s.test, GroupAxis::Item, std::vector<std::size_t>{0, 1u << 30});
    REQUIRE(items.size() == 1);
    const auto whole = rank_scores(scores, s.train, s.test);
    CHECK(items[0].report.recall == whole.recall);

    const std::size_t bad[] = {0, 10, 10};
    CHECK_THROWS_AS(group_scores(scores, s.train, s.test, GroupAxis::User, bad), ConfigError);
  }

  TEST_CASE("denser users easier gives non-decreasing bucket recall") {
    // user b has 10b+5 train items and four test items, b of which it ranks first
    std::vector<Edge> edges;
    TestSet test(5);
    DenseMatrix scores(5, 100);
    for (std::uint32_t b = 0; b < 5; ++b) {
      for (std::uint32_t v = 0; v < 10 * b + 5; ++v) edges.push_back({b, v});
      for (std::uint32_t t = 0; t < 4; ++t) {
        test[b].push_back(60 + t);
        scores(b, 60 + t) = t < b ? 10.0 : -1.0;
      }
    }
    const InteractionGraph train(5, 100, edges);
    const auto groups = group_scores(scores, train, test, GroupAxis::User, kDefaultGroupBoundaries);
    REQUIRE(groups.size() == 5);
    for (std::size_t i = 0; i < groups.size(); ++i) {
      CHECK(groups[i].report.recall_at(20) == doctest::Approx(std::min(1.0, static_cast<double>(i) / 4.0)));
      if (i > 0) CHECK(groups[i].report.recall_at(20) >= groups[i - 1].report.recall_at(20));
    }
    const std::size_t one[] = {0, 1000};
    const auto all = group_scores(scores, train, test, GroupAxis::User, one);
    REQUIRE(all.size() == 1);
    CHECK(all[0].report.recall == rank_scores(scores, train, test).recall);
    CHECK(all[0].report.ndcg == rank_scores(scores, train, test).ndcg);
  }

  TEST_CASE("variants and their configs") {
    TrainConfig base;
    CHECK(AblationVariant::make(VariantTag::WithoutMixhop, base).config.hops == std::vector<int>{1});
    CHECK(AblationVariant::make(VariantTag::WithoutGib, base).config.beta1 == 0.0);
    CHECK(AblationVariant::make(VariantTag::WithoutCl, base).config.beta2 == 0.0);
    CHECK(AblationVariant::make(VariantTag::Full, base).config == base);
    for (VariantTag t : kAllVariants) {
      const auto v = AblationVariant::make(t, base);
      CHECK(parse_variant(v.name()) == t);
      KeyValueConfig kv;
      v.store(kv);
      std::stringstream text;
      kv.write(text);
      CHECK(AblationVariant::load(KeyValueConfig::parse(text)) == v);
    }
    CHECK_THROWS_AS(parse_variant("w/o-everything"), ConfigError);
  }

  TEST_CASE("report round trip and table") {
    const std::vector<ReportRecord> recs{{"full", "all", "recall@20", 0.123456789},
                                         {"w/o-cl", "noise=0.1", "recall@20_rel_drop", -0.25}};
    std::stringstream s;
    write_report(recs, s);
    CHECK(read_report(s) == recs);
    const std::string table = format_table(recs);
    CHECK(table.find("0.1235") != std::string::npos);
    CHECK(table.find("w/o-cl") != std::string::npos);
    std::stringstream bad("variant\tgroup\tmetric\tvalue\nfull\tall\n");
    CHECK_THROWS_AS(read_report(bad), ParseError);
  }

  TEST_CASE("noise records average the relative drop") {
    const std::vector<NoiseRun> runs{{VariantTag::Full, 1, 0.1, 0.5, 0.4},
                                     {VariantTag::Full, 2, 0.1, 0.5, 0.3}};
    const auto recs = noise_records(runs);
    REQUIRE(recs.size() == 1);
    CHECK(recs[0].group == "noise=0.1");
    CHECK(recs[0].value == doctest::Approx(0.3));
    CHECK_THROWS_AS(NoiseRun{}.relative_drop(), NumericError);
  }

  TEST_CASE("ablation protocol on a tiny graph") {
    BlockDatasetSpec spec;
    spec.users = 40;
    spec.items = 40;
    spec.blocks = 4;
    spec.min_interactions = 4;
    spec.max_interactions = 10;
    const auto g = make_block_dataset(spec);
    TrainConfig base;
    base.dim = 8;
    base.hops = {0, 1};
    base.epochs = 3;
    base.batch_size = 64;
    ProtocolOptions opt;
    opt.seeds = {1, 2};
    const auto runs = run_ablation(g, base, kAllVariants, opt);
    CHECK(runs.size() == 8);
    const auto recs = ablation_records(runs);
    CHECK(recs.size() == 4 * 5);
    for (const auto& r : runs) {
      CHECK(r.log.size() == 3);
      CHECK(r.mad > 0.0);
      if (r.variant == VariantTag::WithoutGib)
        for (const auto& e : r.log) CHECK(e.l_kl == 0.0);
    }
  }
}
