#include "graphaug/cli.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "graphaug/errors.hpp"

namespace fs = std::filesystem;

namespace graphaug::cli {

namespace {

void reject_unknown(const KeyValueConfig& cfg, const std::string& section,
                    std::initializer_list<const char*> allowed) {
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const std::string& key : cfg.keys(section))
    if (!ok.count(key)) throw ConfigError("[" + section + "]: unknown key '" + key + "'");
}

std::size_t parse_count(const std::string& text, const std::string& what) {
  const long long v = parse_int(text, what);
  if (v < 0) throw ConfigError(what + ": must be non-negative");
  return static_cast<std::size_t>(v);
}

template <class T, class F>
std::vector<T> parse_list(const std::string& text, const std::string& what, F f) {
  std::vector<T> out;
  for (const std::string& item : split_list(text)) out.push_back(f(item, what));
  if (out.empty()) throw ConfigError(what + ": empty list");
  return out;
}

std::ofstream open_output(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write '" + path.string() + "'");
  return out;
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace

// ---------------------------------------------------------------------------
// Configuration

InteractionGraph DataSource::load() const {
  if (kind == Kind::Block) return make_block_dataset(block);
  return ingest_file(path);
}

void DataSource::store(KeyValueConfig& cfg) const {
  if (kind == Kind::File) {
    cfg.set("data", "source", "file");
    cfg.set("data", "path", path);
    return;
  }
  cfg.set("data", "source", "block");
  cfg.set("data", "users", std::to_string(block.users));
  cfg.set("data", "items", std::to_string(block.items));
  cfg.set("data", "blocks", std::to_string(block.blocks));
  cfg.set("data", "min_interactions", std::to_string(block.min_interactions));
  cfg.set("data", "max_interactions", std::to_string(block.max_interactions));
  cfg.set("data", "noise", format_double(block.noise));
  cfg.set("data", "seed", std::to_string(block.seed));
}

DataSource DataSource::load_config(const KeyValueConfig& cfg, const std::string& base_dir) {
  reject_unknown(cfg, "data",
                 {"source", "path", "users", "items", "blocks", "min_interactions", "max_interactions",
                  "noise", "seed"});
  DataSource d;
  const auto path = cfg.get("data", "path");
  const std::string source = cfg.get_or("data", "source", path ? "file" : "block");
  if (source == "file") {
    d.kind = Kind::File;
    if (!path) throw ConfigError("[data]: source = file needs a path");
    fs::path p(*path);
    if (p.is_relative()) p = fs::path(base_dir) / p;
    d.path = p.lexically_normal().string();
    if (!fs::exists(d.path)) throw ParseError("dataset '" + d.path + "' does not exist");
  } else if (source == "block") {
    auto count = [&](const char* key, std::size_t& field) {
      if (auto v = cfg.get("data", key)) field = parse_count(*v, std::string("data.") + key);
    };
    count("users", d.block.users);
    count("items", d.block.items);
    count("blocks", d.block.blocks);
    count("min_interactions", d.block.min_interactions);
    count("max_interactions", d.block.max_interactions);
    if (auto v = cfg.get("data", "noise")) d.block.noise = parse_double(*v, "data.noise");
    if (auto v = cfg.get("data", "seed")) d.block.seed = parse_count(*v, "data.seed");
  } else {
    throw ConfigError("[data]: unknown source '" + source + "' (file|block)");
  }
  return d;
}

RunConfig RunConfig::parse(const KeyValueConfig& cfg, const std::string& base_dir) {
  static const std::set<std::string> known{"",      "run",   "data",  "train",
                                           "noise", "sweep", "groups"};
  for (const std::string& s : cfg.sections())
    if (!known.count(s)) throw ConfigError("unknown config section [" + s + "]");
  for (const std::string& k : cfg.keys(""))
    throw ConfigError("key '" + k + "' outside any section");

  RunConfig r;
  reject_unknown(cfg, "run", {"output", "protocol", "seeds", "test_fraction", "variants"});
  if (auto v = cfg.get("run", "output")) {
    fs::path p(*v);
    r.output_dir = (p.is_relative() ? fs::path(base_dir) / p : p).lexically_normal().string();
  } else {
    r.output_dir = base_dir;
  }
  r.protocol = cfg.get_or("run", "protocol", "");
  if (auto v = cfg.get("run", "seeds"))
    r.seeds = parse_list<std::uint64_t>(*v, "run.seeds", parse_count);
  if (auto v = cfg.get("run", "test_fraction")) r.test_fraction = parse_double(*v, "run.test_fraction");
  if (!(r.test_fraction > 0.0 && r.test_fraction < 1.0))
    throw ConfigError("run.test_fraction must lie in (0,1)");
  if (auto v = cfg.get("run", "variants"))
    r.variants = parse_list<VariantTag>(*v, "run.variants",
                                        [](const std::string& s, const std::string&) { return parse_variant(s); });

  r.data = DataSource::load_config(cfg, base_dir);
  r.train = TrainConfig::load(cfg, "train");

  reject_unknown(cfg, "noise", {"ratios"});
  if (auto v = cfg.get("noise", "ratios")) r.noise_ratios = parse_list<double>(*v, "noise.ratios", parse_double);
  for (double x : r.noise_ratios)
    if (!(x >= 0.0 && x < 1.0)) throw ConfigError("noise.ratios must lie in [0,1)");

  reject_unknown(cfg, "sweep", {"parameter", "values"});
  r.sweep_parameter = cfg.get_or("sweep", "parameter", r.sweep_parameter);
  if (auto v = cfg.get("sweep", "values")) {
    r.sweep_values = split_list(*v);
    if (r.sweep_values.empty()) throw ConfigError("sweep.values: empty list");
  }

  reject_unknown(cfg, "groups", {"boundaries", "axis"});
  if (auto v = cfg.get("groups", "boundaries"))
    r.group_boundaries = parse_list<std::size_t>(*v, "groups.boundaries", parse_count);
  const std::string axis = cfg.get_or("groups", "axis", "both");
  if (axis == "user") {
    r.group_items = false;
  } else if (axis == "item") {
    r.group_users = false;
  } else if (axis != "both") {
    throw ConfigError("groups.axis: '" + axis + "' (user|item|both)");
  }
  return r;
}

RunConfig RunConfig::load(const std::string& path) {
  if (!fs::exists(path)) throw ParseError("config '" + path + "' does not exist");
  const fs::path parent = fs::absolute(path).parent_path();
  return parse(KeyValueConfig::load(path), parent.string());
}

std::string RunConfig::resolved_output_dir() const {
  const char* env = std::getenv(kOutputDirEnv);
  return env && *env ? std::string(env) : output_dir;
}

// ---------------------------------------------------------------------------
// Protocols

std::vector<ReportRecord> metric_records(const RankingReport& rep, const std::string& variant,
                                         const std::string& group) {
  std::vector<ReportRecord> out;
  for (std::size_t c = 0; c < rep.ks.size(); ++c) {
    out.push_back({variant, group, "recall@" + std::to_string(rep.ks[c]), rep.recall[c]});
    out.push_back({variant, group, "ndcg@" + std::to_string(rep.ks[c]), rep.ndcg[c]});
  }
  return out;
}

std::vector<ReportRecord> ablation_protocol(const RunConfig& run, const InteractionGraph& g) {
  const auto runs = run_ablation(g, run.train, run.variants, {run.seeds, run.test_fraction});
  return ablation_records(runs);
}

std::vector<ReportRecord> noise_protocol(const RunConfig& run, const InteractionGraph& g) {
  const auto runs = run_noise(g, run.train, run.variants, run.noise_ratios, {run.seeds, run.test_fraction});
  return noise_records(runs);
}

std::vector<ReportRecord> groups_protocol(const RunConfig& run, const InteractionGraph& g) {
  struct Acc {
    std::string label;
    std::vector<double> recall, ndcg;
  };
  // keyed by (axis, bucket lower bound) so rows come out in bucket order
  std::map<std::pair<int, std::size_t>, Acc> acc;
  for (std::uint64_t seed : run.seeds) {
    const Split s = split(g, run.test_fraction, seed);
    TrainConfig cfg = run.train;
    cfg.seed = seed;
    const ModelParams model = train(s.train, cfg).model;
    for (int axis = 0; axis < 2; ++axis) {
      if ((axis == 0 && !run.group_users) || (axis == 1 && !run.group_items)) continue;
      const auto groups = group_eval(model, s.train, s.test, axis == 0 ? GroupAxis::User : GroupAxis::Item,
                                     run.group_boundaries);
      for (const GroupReport& gr : groups) {
        Acc& a = acc[{axis, gr.lower}];
        a.label = std::string(axis == 0 ? "user:" : "item:") + gr.label();
        a.recall.push_back(gr.report.recall_at(20));
        a.ndcg.push_back(gr.report.ndcg_at(20));
      }
    }
  }
  std::vector<ReportRecord> out;
  for (const auto& [key, a] : acc) {
    out.push_back({"full", a.label, "recall@20", mean(a.recall)});
    out.push_back({"full", a.label, "ndcg@20", mean(a.ndcg)});
  }
  return out;
}

std::vector<ReportRecord> sweep_protocol(const RunConfig& run, const InteractionGraph& g) {
  std::vector<Split> splits;
  for (std::uint64_t seed : run.seeds) splits.push_back(split(g, run.test_fraction, seed));
  std::vector<ReportRecord> out;
  for (const std::string& value : run.sweep_values) {
    KeyValueConfig kv;
    run.train.store(kv, "train");
    kv.set("train", run.sweep_parameter, value);
    const TrainConfig base = TrainConfig::load(kv, "train");
    std::vector<double> recall;
    for (std::size_t i = 0; i < run.seeds.size(); ++i) {
      TrainConfig cfg = base;
      cfg.seed = run.seeds[i];
      const ModelParams model = train(splits[i].train, cfg).model;
      recall.push_back(rank_metrics(model, splits[i].train, splits[i].test).recall_at(20));
    }
    out.push_back({"full", run.sweep_parameter + "=" + value, "recall@20", mean(recall)});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Commands

namespace {

int cmd_stats(const std::string& path, const std::vector<std::size_t>& counts, std::ostream& out) {
  DatasetStats st;
  if (!counts.empty()) {
    st = compute_stats(counts[0], counts[1], counts[2]);
  } else {
    if (path.empty()) throw CLI::ValidationError("stats", "needs a dataset path or --counts I J E");
    st = compute_stats(ingest_file(path));
  }
  out << "users\t" << st.users << "\n"
      << "items\t" << st.items << "\n"
      << "interactions\t" << st.interactions << "\n"
      << "density\t" << format_two_sig(st.density) << "\n";
  return kOk;
}

int cmd_train(const std::string& config_path, std::ostream& out) {
  const RunConfig run = RunConfig::load(config_path);
  const InteractionGraph g = run.data.load();
  const fs::path dir = run.resolved_output_dir();
  for (std::uint64_t seed : run.seeds) {
    const Split s = split(g, run.test_fraction, seed);
    TrainConfig cfg = run.train;
    cfg.seed = seed;
    const TrainResult result = train(s.train, cfg);

    KeyValueConfig meta;
    run.data.store(meta);
    meta.set("run", "seed", std::to_string(seed));
    meta.set("run", "test_fraction", format_double(run.test_fraction));
    const std::string tag = "seed" + std::to_string(seed);
    {
      auto f = open_output(dir / ("checkpoint-" + tag + ".txt"));
      save_checkpoint(result.model, meta, f);
    }
    {
      auto f = open_output(dir / ("epochs-" + tag + ".tsv"));
      write_epoch_log(result.log, f);
    }
    const auto recs = metric_records(rank_metrics(result.model, s.train, s.test), "model", tag);
    {
      auto f = open_output(dir / ("metrics-" + tag + ".tsv"));
      write_report(recs, f);
    }
    out << "seed " << seed << ": " << result.log.size() << " epochs, final loss "
        << format_double(result.log.back().l_total) << "\n"
        << format_table(recs);
  }
  return kOk;
}

int cmd_eval(const std::string& checkpoint, const std::string& output, std::ostream& out) {
  std::ifstream in(checkpoint);
  if (!in) throw ParseError("cannot open checkpoint '" + checkpoint + "'");
  KeyValueConfig meta;
  const ModelParams model = load_checkpoint(in, &meta);
  const DataSource data = DataSource::load_config(meta, ".");
  const std::string seed_text = meta.get_or("run", "seed", "1");
  const std::uint64_t seed = parse_count(seed_text, "run.seed");
  const double fraction = parse_double(meta.get_or("run", "test_fraction", "0.2"), "run.test_fraction");
  const Split s = split(data.load(), fraction, seed);
  if (s.train.user_count() != model.users || s.train.item_count() != model.items)
    throw ConfigError("checkpoint shape does not match its dataset");
  const auto recs = metric_records(rank_metrics(model, s.train, s.test), "model", "seed" + seed_text);
  if (!output.empty()) {
    auto f = open_output(output);
    write_report(recs, f);
  }
  out << format_table(recs);
  return kOk;
}

int cmd_experiment(const std::string& protocol_arg, const std::string& config_path, std::ostream& out,
                   std::ostream& err, const std::string& usage) {
  const RunConfig run = RunConfig::load(config_path);
  const std::string protocol = protocol_arg.empty() ? run.protocol : protocol_arg;
  using Protocol = std::function<std::vector<ReportRecord>(const RunConfig&, const InteractionGraph&)>;
  static const std::map<std::string, Protocol> table{{"ablation", ablation_protocol},
                                                      {"noise", noise_protocol},
                                                      {"groups", groups_protocol},
                                                      {"hyperparam-sweep", sweep_protocol}};
  const auto it = table.find(protocol);
  if (it == table.end()) {
    err << "graphaug: unknown protocol '" << protocol << "' (ablation|noise|groups|hyperparam-sweep)\n"
        << usage;
    return kUsage;
  }
  const auto recs = it->second(run, run.data.load());
  auto f = open_output(fs::path(run.resolved_output_dir()) / (protocol + ".tsv"));
  write_report(recs, f);
  out << format_table(recs);
  return kOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Graph contrastive collaborative filtering with learned augmentation", "graphaug"};
  app.require_subcommand(1);

  std::string stats_path;
  std::vector<std::size_t> counts;
  auto* stats = app.add_subcommand("stats", "Print dataset statistics");
  stats->add_option("path", stats_path, "Interaction file (user item [weight] per line)");
  stats->add_option("--counts", counts, "Users, items and interactions instead of a file")->expected(3);

  std::string train_config;
  auto* train_cmd = app.add_subcommand("train", "Train one model per seed");
  train_cmd->add_option("--config", train_config, "Run configuration")->required();

  std::string checkpoint, eval_output;
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on its held-out split");
  eval->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();
  eval->add_option("--output", eval_output, "Also write the report here");

  std::string protocol, experiment_config;
  auto* experiment = app.add_subcommand("experiment", "Run an experiment protocol");
  experiment->add_option("--protocol", protocol, "ablation, noise, groups or hyperparam-sweep");
  experiment->add_option("--config", experiment_config, "Run configuration")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "graphaug: " << e.what() << "\n" << app.help();
    return kUsage;
  }

  try {
    if (stats->parsed()) return cmd_stats(stats_path, counts, out);
    if (train_cmd->parsed()) return cmd_train(train_config, out);
    if (eval->parsed()) return cmd_eval(checkpoint, eval_output, out);
    return cmd_experiment(protocol, experiment_config, out, err, experiment->help());
  } catch (const CLI::ParseError& e) {
    err << "graphaug: " << e.what() << "\n" << app.help();
    return kUsage;
  } catch (const NumericError& e) {
    err << "graphaug: numeric failure: " << e.what() << "\n";
    return kNumeric;
  } catch (const std::exception& e) {
    err << "graphaug: " << e.what() << "\n";
    return kInput;
  }
}

}  // namespace graphaug::cli
