#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "graphaug/eval.hpp"
#include "graphaug/synthetic.hpp"
#include "graphaug/trainer.hpp"

namespace graphaug::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kInput = 2, kNumeric = 3 };

/// Output directory override, read at command time.
inline constexpr const char* kOutputDirEnv = "GRAPHAUG_OUTPUT_DIR";

struct DataSource {
  enum class Kind { File, Block };
  Kind kind = Kind::Block;
  std::string path;  ///< absolute once loaded from a config file
  BlockDatasetSpec block;

  InteractionGraph load() const;
  void store(KeyValueConfig& cfg) const;
  static DataSource load_config(const KeyValueConfig& cfg, const std::string& base_dir);
};

/// Everything a command needs: sections [run], [data], [train] and the
/// optional protocol sections [noise], [sweep], [groups].
struct RunConfig {
  DataSource data;
  std::string output_dir = ".";
  std::string protocol;
  std::vector<std::uint64_t> seeds{1};
  double test_fraction = 0.2;
  TrainConfig train;

  std::vector<VariantTag> variants{std::begin(kAllVariants), std::end(kAllVariants)};
  std::vector<double> noise_ratios{0.05, 0.1, 0.15, 0.2, 0.25};
  std::string sweep_parameter = "temperature";
  std::vector<std::string> sweep_values{"0.1", "0.3", "0.5", "0.7", "0.9"};
  std::vector<std::size_t> group_boundaries{std::begin(kDefaultGroupBoundaries),
                                            std::end(kDefaultGroupBoundaries)};
  bool group_users = true;
  bool group_items = true;

  static RunConfig parse(const KeyValueConfig& cfg, const std::string& base_dir = ".");
  static RunConfig load(const std::string& path);
  /// Environment override applied over `output_dir`.
  std::string resolved_output_dir() const;
};

/// Report rows of the experiment protocols.
std::vector<ReportRecord> ablation_protocol(const RunConfig& run, const InteractionGraph& g);
std::vector<ReportRecord> noise_protocol(const RunConfig& run, const InteractionGraph& g);
std::vector<ReportRecord> groups_protocol(const RunConfig& run, const InteractionGraph& g);
std::vector<ReportRecord> sweep_protocol(const RunConfig& run, const InteractionGraph& g);

std::vector<ReportRecord> metric_records(const RankingReport& rep, const std::string& variant,
                                         const std::string& group);

/// Parses argv and runs one command; returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace graphaug::cli
