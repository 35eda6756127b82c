#include "graphaug/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <set>
#include <sstream>

#include "graphaug/errors.hpp"
#include "graphaug/rng.hpp"

namespace graphaug {

namespace {

std::size_t cutoff_index(const std::vector<std::size_t>& ks, std::size_t k) {
  const auto it = std::find(ks.begin(), ks.end(), k);
  if (it == ks.end()) throw ContractViolation("report has no cutoff @" + std::to_string(k));
  return static_cast<std::size_t>(it - ks.begin());
}

// Scores users in `include`; the test lists may already be filtered.
RankingReport evaluate(const DenseMatrix& scores, const InteractionGraph& train, const TestSet& test,
                       std::span<const std::uint32_t> include, const RankOptions& options) {
  if (options.ks.empty()) throw ContractViolation("rank: no cutoffs");
  const std::size_t kmax = *std::max_element(options.ks.begin(), options.ks.end());
  const std::size_t items = train.item_count();

  RankingReport rep;
  rep.ks = options.ks;
  rep.recall.assign(options.ks.size(), 0.0);
  rep.ndcg.assign(options.ks.size(), 0.0);

  std::vector<std::uint32_t> candidates;
  std::vector<double> discount(kmax + 1);
  for (std::size_t r = 0; r <= kmax; ++r) discount[r] = 1.0 / std::log2(static_cast<double>(r) + 2.0);

  for (std::uint32_t u : include) {
    const auto& held = test[u];
    if (held.empty()) {
      ++rep.skipped;
      continue;
    }
    const auto row = scores.row(u);
    candidates.clear();
    const auto seen = train.items_of(u);
    for (std::uint32_t v = 0; v < items; ++v)
      if (!std::binary_search(seen.begin(), seen.end(), v)) candidates.push_back(v);
    const std::size_t top = std::min(kmax, candidates.size());
    std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(top),
                      candidates.end(), [&row](std::uint32_t a, std::uint32_t b) {
                        return row[a] > row[b] || (row[a] == row[b] && a < b);
                      });

    UserMetrics um;
    um.user = u;
    for (std::size_t c = 0; c < options.ks.size(); ++c) {
      const std::size_t k = options.ks[c];
      double hits = 0.0, dcg = 0.0, idcg = 0.0;
      for (std::size_t r = 0; r < std::min(k, top); ++r) {
        if (std::binary_search(held.begin(), held.end(), candidates[r])) {
          hits += 1.0;
          dcg += discount[r];
        }
      }
      for (std::size_t r = 0; r < std::min(k, held.size()); ++r) idcg += discount[r];
      um.recall.push_back(hits / static_cast<double>(held.size()));
      um.ndcg.push_back(dcg / idcg);
      rep.recall[c] += um.recall.back();
      rep.ndcg[c] += um.ndcg.back();
    }
    ++rep.evaluated;
    if (options.per_user) rep.per_user.push_back(std::move(um));
  }
  if (rep.evaluated > 0) {
    for (std::size_t c = 0; c < options.ks.size(); ++c) {
      rep.recall[c] /= static_cast<double>(rep.evaluated);
      rep.ndcg[c] /= static_cast<double>(rep.evaluated);
    }
  }
  return rep;
}

void check_inputs(const DenseMatrix& scores, const InteractionGraph& train, const TestSet& test) {
  if (scores.rows() != train.user_count() || scores.cols() != train.item_count())
    throw ContractViolation("rank: score matrix must be users x items");
  if (test.size() != train.user_count()) throw ContractViolation("rank: test set has wrong user count");
  for (const auto& items : test)
    for (std::uint32_t v : items)
      if (v >= train.item_count()) throw ContractViolation("rank: test item out of range");
}

}  // namespace

double RankingReport::recall_at(std::size_t k) const { return recall[cutoff_index(ks, k)]; }
double RankingReport::ndcg_at(std::size_t k) const { return ndcg[cutoff_index(ks, k)]; }

RankingReport rank_scores(const DenseMatrix& scores, const InteractionGraph& train, const TestSet& test,
                          const RankOptions& options) {
  check_inputs(scores, train, test);
  std::vector<std::uint32_t> all(train.user_count());
  std::iota(all.begin(), all.end(), 0u);
  RankingReport rep = evaluate(scores, train, test, all, options);
  if (rep.evaluated == 0) throw ContractViolation("rank: every user has an empty test set");
  return rep;
}

DenseMatrix score_matrix(const DenseMatrix& embeddings, std::size_t users) {
  if (users > embeddings.rows()) throw ContractViolation("score_matrix: more users than rows");
  const std::size_t items = embeddings.rows() - users;
  const std::size_t d = embeddings.cols();
  DenseMatrix s(users, items);
  for (std::size_t u = 0; u < users; ++u) {
    const double* a = embeddings.data() + u * d;
    for (std::size_t v = 0; v < items; ++v) {
      const double* b = embeddings.data() + (users + v) * d;
      double acc = 0.0;
      for (std::size_t k = 0; k < d; ++k) acc += a[k] * b[k];
      s(u, v) = acc;
    }
  }
  return s;
}

RankingReport rank_metrics(const ModelParams& model, const InteractionGraph& train, const TestSet& test,
                           const RankOptions& options) {
  const DenseMatrix emb = final_embeddings(model, normalize_adjacency(train));
  return rank_scores(score_matrix(emb, model.users), train, test, options);
}

InteractionGraph inject_noise(const InteractionGraph& g, double ratio, std::uint64_t seed) {
  if (!(ratio >= 0.0 && ratio < 1.0)) throw ConfigError("inject_noise: ratio must lie in [0,1)");
  const auto count = static_cast<std::size_t>(std::floor(ratio * static_cast<double>(g.edge_count())));
  if (count == 0) return g;
  std::set<Edge> present(g.edges().begin(), g.edges().end());
  std::vector<Edge> edges = g.edges();
  Rng rng = make_rng(seed, "noise");
  std::uniform_int_distribution<std::uint32_t> pick_user(0, static_cast<std::uint32_t>(g.user_count() - 1));
  std::uniform_int_distribution<std::uint32_t> pick_item(0, static_cast<std::uint32_t>(g.item_count() - 1));
  const std::size_t limit = 64 * count + 1024;
  std::size_t added = 0;
  for (std::size_t attempt = 0; added < count; ++attempt) {
    if (attempt == limit)
      throw ContractViolation("inject_noise: gave up after " + std::to_string(limit) +
                              " draws; graph too dense for " + std::to_string(count) + " fake edges");
    const Edge e{pick_user(rng), pick_item(rng)};
    if (present.insert(e).second) {
      edges.push_back(e);
      ++added;
    }
  }
  InteractionGraph out(g.user_count(), g.item_count(), std::move(edges));
  if (!g.user_ids().empty()) out.set_ids(g.user_ids(), g.item_ids());
  return out;
}

std::string GroupReport::label() const { return std::to_string(lower) + "-" + std::to_string(upper); }

std::vector<GroupReport> group_scores(const DenseMatrix& scores, const InteractionGraph& train,
                                      const TestSet& test, GroupAxis axis,
                                      std::span<const std::size_t> boundaries, const RankOptions& options) {
  check_inputs(scores, train, test);
  if (boundaries.size() < 2) throw ConfigError("group_eval: need at least two boundaries");
  for (std::size_t i = 1; i < boundaries.size(); ++i)
    if (boundaries[i] <= boundaries[i - 1]) throw ConfigError("group_eval: boundaries must increase strictly");

  const std::vector<std::size_t> item_degree = train.item_degrees();
  std::vector<GroupReport> out;
  for (std::size_t b = 0; b + 1 < boundaries.size(); ++b) {
    const std::size_t lo = boundaries[b], hi = boundaries[b + 1];
    auto inside = [lo, hi](std::size_t d) { return d >= lo && d < hi; };
    GroupReport gr;
    gr.lower = lo;
    gr.upper = hi;
    std::vector<std::uint32_t> include;
    RankingReport rep;
    if (axis == GroupAxis::User) {
      for (std::uint32_t u = 0; u < train.user_count(); ++u)
        if (inside(train.user_degree(u))) include.push_back(u);
      gr.members = include.size();
      rep = evaluate(scores, train, test, include, options);
    } else {
      for (std::size_t d : item_degree) gr.members += inside(d) ? 1 : 0;
      TestSet filtered(test.size());
      for (std::uint32_t u = 0; u < test.size(); ++u) {
        for (std::uint32_t v : test[u])
          if (inside(item_degree[v])) filtered[u].push_back(v);
        if (!filtered[u].empty()) include.push_back(u);
      }
      rep = evaluate(scores, train, filtered, include, options);
    }
    if (rep.evaluated == 0) continue;
    gr.report = std::move(rep);
    out.push_back(std::move(gr));
  }
  return out;
}

std::vector<GroupReport> group_eval(const ModelParams& model, const InteractionGraph& train,
                                    const TestSet& test, GroupAxis axis,
                                    std::span<const std::size_t> boundaries, const RankOptions& options) {
  const DenseMatrix emb = final_embeddings(model, normalize_adjacency(train));
  return group_scores(score_matrix(emb, model.users), train, test, axis, boundaries, options);
}

// ---------------------------------------------------------------------------
// Ablation variants

std::string variant_name(VariantTag tag) {
  switch (tag) {
    case VariantTag::Full: return "full";
    case VariantTag::WithoutMixhop: return "w/o-mixhop";
    case VariantTag::WithoutGib: return "w/o-gib";
    case VariantTag::WithoutCl: return "w/o-cl";
  }
  return "?";
}

VariantTag parse_variant(const std::string& name) {
  for (VariantTag t : kAllVariants)
    if (variant_name(t) == name) return t;
  throw ConfigError("unknown variant '" + name + "' (full|w/o-mixhop|w/o-gib|w/o-cl)");
}

AblationVariant AblationVariant::make(VariantTag tag, const TrainConfig& base) {
  AblationVariant v{tag, base};
  switch (tag) {
    case VariantTag::Full: break;
    case VariantTag::WithoutMixhop: v.config.hops = {1}; break;
    case VariantTag::WithoutGib: v.config.beta1 = 0.0; break;
    case VariantTag::WithoutCl: v.config.beta2 = 0.0; break;
  }
  v.config.validate();
  return v;
}

std::string AblationVariant::name() const { return variant_name(tag); }

void AblationVariant::store(KeyValueConfig& cfg) const {
  cfg.set("variant", "name", name());
  config.store(cfg, "train");
}

AblationVariant AblationVariant::load(const KeyValueConfig& cfg) {
  const auto name = cfg.get("variant", "name");
  if (!name) throw ConfigError("variant: missing [variant] name");
  return {parse_variant(*name), TrainConfig::load(cfg, "train")};
}

std::vector<AblationRun> run_ablation(const InteractionGraph& g, const TrainConfig& base,
                                      std::span<const VariantTag> variants, const ProtocolOptions& options) {
  if (options.seeds.empty()) throw ConfigError("ablation: seed list is empty");
  std::vector<AblationRun> runs;
  for (std::uint64_t seed : options.seeds) {
    const Split s = split(g, options.test_fraction, seed);
    const NormalizedAdjacency adj = normalize_adjacency(s.train);
    for (VariantTag tag : variants) {
      AblationVariant v = AblationVariant::make(tag, base);
      v.config.seed = seed;
      TrainResult r = train(s.train, v.config);
      const DenseMatrix emb = final_embeddings(r.model, adj);
      DenseMatrix user_rows(g.user_count(), emb.cols());
      std::copy_n(emb.data(), user_rows.size(), user_rows.data());
      AblationRun run;
      run.variant = tag;
      run.seed = seed;
      run.report = rank_scores(score_matrix(emb, g.user_count()), s.train, s.test);
      run.mad = mad(user_rows);
      run.log = std::move(r.log);
      runs.push_back(std::move(run));
    }
  }
  return runs;
}

double NoiseRun::relative_drop() const {
  if (clean_recall == 0.0) throw NumericError("relative drop undefined: clean recall is 0");
  return (clean_recall - noisy_recall) / clean_recall;
}

std::vector<NoiseRun> run_noise(const InteractionGraph& g, const TrainConfig& base,
                                std::span<const VariantTag> variants, std::span<const double> ratios,
                                const ProtocolOptions& options) {
  if (options.seeds.empty()) throw ConfigError("noise: seed list is empty");
  std::vector<NoiseRun> runs;
  for (std::uint64_t seed : options.seeds) {
    const Split s = split(g, options.test_fraction, seed);
    std::vector<InteractionGraph> noisy;
    for (std::size_t r = 0; r < ratios.size(); ++r) {
      const InteractionGraph full = inject_noise(g, ratios[r], derive_seed(seed, "noise", r));
      std::vector<Edge> edges = s.train.edges();
      for (const Edge& e : full.edges())
        if (!g.contains(e.user, e.item)) edges.push_back(e);
      noisy.emplace_back(g.user_count(), g.item_count(), std::move(edges));
    }
    for (VariantTag tag : variants) {
      AblationVariant v = AblationVariant::make(tag, base);
      v.config.seed = seed;
      const double clean = rank_metrics(train(s.train, v.config).model, s.train, s.test).recall_at(20);
      for (std::size_t r = 0; r < ratios.size(); ++r) {
        const ModelParams m = train(noisy[r], v.config).model;
        NoiseRun run;
        run.variant = tag;
        run.seed = seed;
        run.ratio = ratios[r];
        run.clean_recall = clean;
        run.noisy_recall = rank_metrics(m, noisy[r], s.test).recall_at(20);
        runs.push_back(run);
      }
    }
  }
  return runs;
}

// ---------------------------------------------------------------------------
// Reports

void write_report(std::span<const ReportRecord> records, std::ostream& out) {
  out << "variant\tgroup\tmetric\tvalue\n";
  for (const ReportRecord& r : records)
    out << r.variant << '\t' << r.group << '\t' << r.metric << '\t' << format_double(r.value) << '\n';
}

std::vector<ReportRecord> read_report(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "variant\tgroup\tmetric\tvalue")
    throw ParseError("report: missing header", 1);
  std::vector<ReportRecord> out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::istringstream s(line);
    for (std::string cell; std::getline(s, cell, '\t');) f.push_back(cell);
    if (f.size() != 4) throw ParseError("report: expected 4 tab-separated fields", lineno);
    try {
      out.push_back({f[0], f[1], f[2], parse_double(f[3], "value")});
    } catch (const ConfigError& e) {
      throw ParseError(e.what(), lineno);
    }
  }
  return out;
}

std::string format_table(std::span<const ReportRecord> records) {
  std::vector<std::vector<std::string>> rows{{"variant", "group", "metric", "value"}};
  for (const ReportRecord& r : records) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", r.value);
    rows.push_back({r.variant, r.group, r.metric, buf});
  }
  std::size_t width[4] = {0, 0, 0, 0};
  for (const auto& row : rows)
    for (std::size_t c = 0; c < 4; ++c) width[c] = std::max(width[c], row[c].size());
  std::string out;
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < 4; ++c) {
      if (c == 3) out += std::string(width[c] - row[c].size(), ' ') + row[c];
      else out += row[c] + std::string(width[c] - row[c].size() + 2, ' ');
    }
    out += '\n';
  }
  return out;
}

std::vector<ReportRecord> ablation_records(std::span<const AblationRun> runs) {
  std::vector<ReportRecord> out;
  for (VariantTag tag : kAllVariants) {
    std::vector<const AblationRun*> mine;
    for (const AblationRun& r : runs)
      if (r.variant == tag) mine.push_back(&r);
    if (mine.empty()) continue;
    const double n = static_cast<double>(mine.size());
    auto mean = [&](auto f) {
      double acc = 0.0;
      for (const AblationRun* r : mine) acc += f(*r);
      return acc / n;
    };
    const std::string name = variant_name(tag);
    for (std::size_t k : {20, 40}) {
      out.push_back({name, "all", "recall@" + std::to_string(k),
                     mean([k](const AblationRun& r) { return r.report.recall_at(k); })});
      out.push_back({name, "all", "ndcg@" + std::to_string(k),
                     mean([k](const AblationRun& r) { return r.report.ndcg_at(k); })});
    }
    out.push_back({name, "all", "mad", mean([](const AblationRun& r) { return r.mad; })});
  }
  return out;
}

std::vector<ReportRecord> noise_records(std::span<const NoiseRun> runs) {
  std::map<std::pair<int, double>, std::pair<double, std::size_t>> acc;
  std::vector<std::pair<VariantTag, double>> order;
  for (const NoiseRun& r : runs) {
    const auto key = std::make_pair(static_cast<int>(r.variant), r.ratio);
    auto [it, fresh] = acc.try_emplace(key, 0.0, 0);
    if (fresh) order.emplace_back(r.variant, r.ratio);
    it->second.first += r.relative_drop();
    ++it->second.second;
  }
  std::vector<ReportRecord> out;
  for (const auto& [tag, ratio] : order) {
    const auto& [sum, n] = acc.at({static_cast<int>(tag), ratio});
    out.push_back({variant_name(tag), "noise=" + format_double(ratio), "recall@20_rel_drop",
                   sum / static_cast<double>(n)});
  }
  return out;
}

}  // namespace graphaug
