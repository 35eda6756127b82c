#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "graphaug/graph.hpp"
#include "graphaug/trainer.hpp"

namespace graphaug {

struct UserMetrics {
  std::uint32_t user = 0;
  std::vector<double> recall;  ///< one per cutoff
  std::vector<double> ndcg;
};

/// Means over evaluated users, one entry per cutoff in `ks`.
struct RankingReport {
  std::vector<std::size_t> ks;
  std::vector<double> recall;
  std::vector<double> ndcg;
  std::size_t evaluated = 0;
  std::size_t skipped = 0;  ///< users with an empty test set
  std::vector<UserMetrics> per_user;

  double recall_at(std::size_t k) const;
  double ndcg_at(std::size_t k) const;
};

struct RankOptions {
  std::vector<std::size_t> ks{20, 40};
  bool per_user = false;
};

/// Ranks, for each user, every item not in the user's training set by score
/// (descending; equal scores by ascending item index) and scores the
/// cutoffs against the held-out items. `scores` is I x J.
RankingReport rank_scores(const DenseMatrix& scores, const InteractionGraph& train,
                          const TestSet& test, const RankOptions& options = {});

/// Dot-product scores of the user rows against the item rows.
DenseMatrix score_matrix(const DenseMatrix& embeddings, std::size_t users);

RankingReport rank_metrics(const ModelParams& model, const InteractionGraph& train,
                           const TestSet& test, const RankOptions& options = {});

/// Adds floor(ratio * E) distinct user-item pairs absent from g, uniformly
/// at random. Gives up with ContractViolation after a bounded number of
/// rejected draws (nearly complete graphs).
InteractionGraph inject_noise(const InteractionGraph& g, double ratio, std::uint64_t seed);

enum class GroupAxis { User, Item };

struct GroupReport {
  std::size_t lower = 0;  ///< interaction-count bucket [lower, upper)
  std::size_t upper = 0;
  std::size_t members = 0;  ///< users (or items) in the bucket
  RankingReport report;

  std::string label() const;
};

/// Per-bucket metrics by training interaction count. On the user axis a
/// user is scored only in its own bucket; on the item axis each user's
/// held-out items are restricted to the bucket's items, so hits count toward
/// the hit item's bucket. Buckets with nothing to evaluate are omitted.
std::vector<GroupReport> group_scores(const DenseMatrix& scores, const InteractionGraph& train,
                                      const TestSet& test, GroupAxis axis,
                                      std::span<const std::size_t> boundaries,
                                      const RankOptions& options = {});
std::vector<GroupReport> group_eval(const ModelParams& model, const InteractionGraph& train,
                                    const TestSet& test, GroupAxis axis,
                                    std::span<const std::size_t> boundaries,
                                    const RankOptions& options = {});

inline constexpr std::size_t kDefaultGroupBoundaries[] = {0, 10, 20, 30, 40, 50};

enum class VariantTag { Full, WithoutMixhop, WithoutGib, WithoutCl };

struct AblationVariant {
  VariantTag tag = VariantTag::Full;
  TrainConfig config;

  static AblationVariant make(VariantTag tag, const TrainConfig& base);
  std::string name() const;

  void store(KeyValueConfig& cfg) const;
  static AblationVariant load(const KeyValueConfig& cfg);

  friend bool operator==(const AblationVariant&, const AblationVariant&) = default;
};

std::string variant_name(VariantTag tag);
VariantTag parse_variant(const std::string& name);
inline constexpr VariantTag kAllVariants[] = {VariantTag::Full, VariantTag::WithoutMixhop,
                                              VariantTag::WithoutGib, VariantTag::WithoutCl};

struct ProtocolOptions {
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  double test_fraction = 0.2;
};

struct AblationRun {
  VariantTag variant = VariantTag::Full;
  std::uint64_t seed = 0;
  RankingReport report;
  double mad = 0.0;  ///< over final user embeddings
  std::vector<EpochRecord> log;
};

/// Trains every variant on the split of each seed (the seed also drives the
/// variant's training streams).
std::vector<AblationRun> run_ablation(const InteractionGraph& g, const TrainConfig& base,
                                      std::span<const VariantTag> variants,
                                      const ProtocolOptions& options = {});

struct NoiseRun {
  VariantTag variant = VariantTag::Full;
  std::uint64_t seed = 0;
  double ratio = 0.0;
  double clean_recall = 0.0;
  double noisy_recall = 0.0;
  /// (clean - noisy) / clean of Recall@20.
  double relative_drop() const;
};

/// Fake interactions (absent from the full graph, so never a test item) are
/// added to each seed's training split; the test split stays clean.
std::vector<NoiseRun> run_noise(const InteractionGraph& g, const TrainConfig& base,
                                std::span<const VariantTag> variants, std::span<const double> ratios,
                                const ProtocolOptions& options = {});

/// One tab-separated report line.
struct ReportRecord {
  std::string variant;
  std::string group;
  std::string metric;
  double value = 0.0;

  friend bool operator==(const ReportRecord&, const ReportRecord&) = default;
};

void write_report(std::span<const ReportRecord> records, std::ostream& out);
std::vector<ReportRecord> read_report(std::istream& in);
/// Human-readable table with aligned columns.
std::string format_table(std::span<const ReportRecord> records);

/// Seed-averaged report rows for each protocol.
std::vector<ReportRecord> ablation_records(std::span<const AblationRun> runs);
std::vector<ReportRecord> noise_records(std::span<const NoiseRun> runs);

}  // namespace graphaug
