#include "graphaug/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <random>
#include <set>
#include <sstream>

#include "graphaug/errors.hpp"
#include "graphaug/rng.hpp"

namespace graphaug {

namespace {

template <typename E>
struct EnumName {
  E value;
  const char* name;
};

constexpr EnumName<Readout> kReadouts[] = {{Readout::LayerMean, "mean"}, {Readout::LastLayer, "last"}};
constexpr EnumName<CandidatePolicy> kPolicies[] = {{CandidatePolicy::Observed, "observed"},
                                                   {CandidatePolicy::TwoHop, "two_hop"}};
constexpr EnumName<LikelihoodViews> kViews[] = {{LikelihoodViews::Both, "both"},
                                                {LikelihoodViews::First, "first"}};
constexpr EnumName<NegativeSet> kNegatives[] = {{NegativeSet::InBatch, "in_batch"},
                                                {NegativeSet::Full, "full"}};
constexpr EnumName<ViewInput> kInputs[] = {{ViewInput::Initial, "initial"},
                                           {ViewInput::Perturbed, "perturbed"}};
constexpr EnumName<OptimizerKind> kOptimizers[] = {{OptimizerKind::Sgd, "sgd"},
                                                   {OptimizerKind::Adam, "adam"}};

template <typename E, std::size_t N>
const char* name_of(const EnumName<E> (&table)[N], E v) {
  for (const auto& e : table)
    if (e.value == v) return e.name;
  return "?";
}

template <typename E, std::size_t N>
E parse_enum(const EnumName<E> (&table)[N], const std::string& text, const std::string& key) {
  for (const auto& e : table)
    if (text == e.name) return e.value;
  std::string allowed;
  for (const auto& e : table) allowed += std::string(allowed.empty() ? "" : "|") + e.name;
  throw ConfigError(key + ": '" + text + "' is not one of " + allowed);
}

std::string hex(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

double unhex(const std::string& s) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || *end != '\0') throw ParseError("checkpoint: bad number '" + s + "'");
  return v;
}

std::string join_hops(const std::vector<int>& hops) {
  std::string s;
  for (std::size_t i = 0; i < hops.size(); ++i) s += (i ? "," : "") + std::to_string(hops[i]);
  return s;
}

void sgd_update(ModelParams& model, const std::vector<DenseMatrix>& grads) {
  auto tensors = model.tensors();
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    auto& v = tensors[i]->values();
    const auto& g = grads[i].values();
    for (std::size_t k = 0; k < v.size(); ++k) v[k] -= model.learning_rate * g[k];
  }
}

void adam_update(ModelParams& model, const std::vector<DenseMatrix>& grads) {
  constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  auto tensors = model.tensors();
  AdamState& st = model.adam;
  if (st.first.size() != tensors.size()) {
    st.first.clear();
    st.second.clear();
    for (const DenseMatrix* t : tensors) {
      st.first.emplace_back(t->rows(), t->cols());
      st.second.emplace_back(t->rows(), t->cols());
    }
  }
  ++st.step;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(st.step));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(st.step));
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    auto& v = tensors[i]->values();
    auto& m = st.first[i].values();
    auto& s = st.second[i].values();
    const auto& g = grads[i].values();
    for (std::size_t k = 0; k < v.size(); ++k) {
      m[k] = b1 * m[k] + (1.0 - b1) * g[k];
      s[k] = b2 * s[k] + (1.0 - b2) * g[k] * g[k];
      v[k] -= model.learning_rate * (m[k] / c1) / (std::sqrt(s[k] / c2) + eps);
    }
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// TrainConfig

EncoderConfig TrainConfig::encoder() const {
  EncoderConfig e;
  e.dim = dim;
  e.layers = layers;
  e.hops = hops;
  e.slope = slope;
  e.readout = readout;
  return e;
}

AugmentorConfig TrainConfig::augmentor() const {
  AugmentorConfig a;
  a.keep_probability = keep_probability;
  a.temperature = gumbel_temperature;
  a.threshold = threshold;
  a.slope = slope;
  return a;
}

void TrainConfig::validate() const {
  encoder().validate();
  augmentor().validate();
  if (!(temperature > 0.0)) throw ConfigError("temperature must be positive");
  if (!(beta1 >= 0.0 && beta2 >= 0.0 && beta3 >= 0.0 && kl_beta >= 0.0))
    throw ConfigError("loss weights must be non-negative");
  if (beta1 > 0.0 && dim % 2 != 0) throw ConfigError("GIB pooling needs an even embedding width");
  if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  if (!(lr_decay > 0.0 && lr_decay <= 1.0)) throw ConfigError("lr_decay must lie in (0,1]");
  if (epochs == 0) throw ConfigError("epochs must be at least 1");
  if (batch_size == 0) throw ConfigError("batch size must be at least 1");
  if (steps_per_epoch == 0) throw ConfigError("steps_per_epoch must be at least 1");
  if (!(candidate_budget >= 0.0 && candidate_budget <= 1.0))
    throw ConfigError("candidate budget must lie in [0,1]");
}

void TrainConfig::store(KeyValueConfig& cfg, const std::string& s) const {
  cfg.set(s, "dim", std::to_string(dim));
  cfg.set(s, "layers", std::to_string(layers));
  cfg.set(s, "hops", join_hops(hops));
  cfg.set(s, "slope", format_double(slope));
  cfg.set(s, "readout", name_of(kReadouts, readout));
  cfg.set(s, "temperature", format_double(temperature));
  cfg.set(s, "gumbel_temperature", format_double(gumbel_temperature));
  cfg.set(s, "threshold", format_double(threshold));
  cfg.set(s, "keep_probability", format_double(keep_probability));
  cfg.set(s, "candidates", name_of(kPolicies, candidates));
  cfg.set(s, "candidate_budget", format_double(candidate_budget));
  cfg.set(s, "beta1", format_double(beta1));
  cfg.set(s, "beta2", format_double(beta2));
  cfg.set(s, "beta3", format_double(beta3));
  cfg.set(s, "kl_beta", format_double(kl_beta));
  cfg.set(s, "likelihood_views", name_of(kViews, likelihood_views));
  cfg.set(s, "negatives", name_of(kNegatives, negatives));
  cfg.set(s, "view_input", name_of(kInputs, view_input));
  cfg.set(s, "learning_rate", format_double(learning_rate));
  cfg.set(s, "lr_decay", format_double(lr_decay));
  cfg.set(s, "optimizer", name_of(kOptimizers, optimizer));
  cfg.set(s, "epochs", std::to_string(epochs));
  cfg.set(s, "batch_size", std::to_string(batch_size));
  cfg.set(s, "steps_per_epoch", std::to_string(steps_per_epoch));
  cfg.set(s, "seed", std::to_string(seed));
}

TrainConfig TrainConfig::load(const KeyValueConfig& cfg, const std::string& s) {
  TrainConfig c;
  auto count = [](const std::string& v, const std::string& k) {
    const long long n = parse_int(v, k);
    if (n < 0) throw ConfigError(k + " must be non-negative");
    return static_cast<std::size_t>(n);
  };
  for (const std::string& key : cfg.keys(s)) {
    const std::string v = *cfg.get(s, key);
    if (key == "dim") c.dim = count(v, key);
    else if (key == "layers") c.layers = count(v, key);
    else if (key == "hops") {
      c.hops.clear();
      for (const std::string& h : split_list(v)) c.hops.push_back(static_cast<int>(parse_int(h, key)));
    }
    else if (key == "slope") c.slope = parse_double(v, key);
    else if (key == "readout") c.readout = parse_enum(kReadouts, v, key);
    else if (key == "temperature") c.temperature = parse_double(v, key);
    else if (key == "gumbel_temperature") c.gumbel_temperature = parse_double(v, key);
    else if (key == "threshold") c.threshold = parse_double(v, key);
    else if (key == "keep_probability") c.keep_probability = parse_double(v, key);
    else if (key == "candidates") c.candidates = parse_enum(kPolicies, v, key);
    else if (key == "candidate_budget") c.candidate_budget = parse_double(v, key);
    else if (key == "beta1") c.beta1 = parse_double(v, key);
    else if (key == "beta2") c.beta2 = parse_double(v, key);
    else if (key == "beta3") c.beta3 = parse_double(v, key);
    else if (key == "kl_beta") c.kl_beta = parse_double(v, key);
    else if (key == "likelihood_views") c.likelihood_views = parse_enum(kViews, v, key);
    else if (key == "negatives") c.negatives = parse_enum(kNegatives, v, key);
    else if (key == "view_input") c.view_input = parse_enum(kInputs, v, key);
    else if (key == "learning_rate") c.learning_rate = parse_double(v, key);
    else if (key == "lr_decay") c.lr_decay = parse_double(v, key);
    else if (key == "optimizer") c.optimizer = parse_enum(kOptimizers, v, key);
    else if (key == "epochs") c.epochs = count(v, key);
    else if (key == "batch_size") c.batch_size = count(v, key);
    else if (key == "steps_per_epoch") c.steps_per_epoch = count(v, key);
    else if (key == "seed") c.seed = static_cast<std::uint64_t>(parse_int(v, key));
    else throw ConfigError("unknown key '" + key + "' in [" + s + "]");
  }
  return c;
}

// ---------------------------------------------------------------------------
// ModelParams

ModelParams ModelParams::init(const TrainConfig& config, std::size_t users, std::size_t items) {
  config.validate();
  if (users == 0 || items == 0) throw ContractViolation("model: need users and items");
  ModelParams m;
  m.config = config;
  m.users = users;
  m.items = items;
  Rng rng = make_rng(config.seed, "init");
  const double bound = 1.0 / std::sqrt(static_cast<double>(config.dim));
  std::uniform_real_distribution<double> dist(-bound, bound);
  m.embeddings = DenseMatrix(users + items, config.dim);
  for (double& v : m.embeddings.values()) v = dist(rng);
  m.encoder = EncoderParams::init(config.encoder(), rng);
  m.augmentor = AugmentorParams::init(config.dim, config.augmentor(), rng);
  m.learning_rate = config.learning_rate;
  return m;
}

std::vector<DenseMatrix*> ModelParams::tensors() {
  std::vector<DenseMatrix*> out{&embeddings};
  for (auto& layer : encoder.weights)
    for (auto& w : layer) out.push_back(&w);
  out.push_back(&augmentor.w1);
  out.push_back(&augmentor.b1);
  out.push_back(&augmentor.w2);
  out.push_back(&augmentor.b2);
  return out;
}

std::vector<const DenseMatrix*> ModelParams::tensors() const {
  auto mut = const_cast<ModelParams*>(this)->tensors();
  return {mut.begin(), mut.end()};
}

bool ModelParams::all_finite() const {
  const auto ts = tensors();
  return std::all_of(ts.begin(), ts.end(), [](const DenseMatrix* t) { return t->all_finite(); });
}

bool operator==(const ModelParams& a, const ModelParams& b) {
  if (!(a.config == b.config) || a.users != b.users || a.items != b.items ||
      a.learning_rate != b.learning_rate || a.epochs_done != b.epochs_done || !(a.adam == b.adam))
    return false;
  const auto ta = a.tensors();
  const auto tb = b.tensors();
  if (ta.size() != tb.size()) return false;
  for (std::size_t i = 0; i < ta.size(); ++i)
    if (!(*ta[i] == *tb[i])) return false;
  return true;
}

DenseMatrix final_embeddings(const ModelParams& model, const NormalizedAdjacency& adj) {
  ad::Tape tape;
  ad::Var h0 = tape.constant(model.embeddings);
  EncoderVars enc = EncoderVars::bind(tape, model.encoder);
  return encode(Propagator::fixed(adj), h0, enc).embeddings.value();
}

// ---------------------------------------------------------------------------
// Sampling and training

std::vector<Triplet3> sample_triplets(const InteractionGraph& train, std::size_t batch,
                                      std::uint64_t seed) {
  std::vector<std::uint32_t> eligible;
  for (std::size_t u = 0; u < train.user_count(); ++u) {
    const std::size_t d = train.user_degree(u);
    if (d > 0 && d < train.item_count()) eligible.push_back(static_cast<std::uint32_t>(u));
  }
  if (eligible.empty()) {
    throw ContractViolation(train.empty() ? "sample_triplets: empty training set"
                                          : "sample_triplets: every user interacted with every item");
  }
  Rng rng = make_rng(seed, "triplets");
  std::uniform_int_distribution<std::size_t> pick_user(0, eligible.size() - 1);
  std::uniform_int_distribution<std::uint32_t> pick_item(0, static_cast<std::uint32_t>(train.item_count() - 1));
  std::vector<Triplet3> out;
  out.reserve(batch);
  for (std::size_t b = 0; b < batch; ++b) {
    const std::uint32_t u = eligible[pick_user(rng)];
    const auto items = train.items_of(u);
    std::uniform_int_distribution<std::size_t> pick_pos(0, items.size() - 1);
    const std::uint32_t pos = items[pick_pos(rng)];
    std::uint32_t neg = pick_item(rng);
    while (std::binary_search(items.begin(), items.end(), neg)) neg = pick_item(rng);
    out.push_back({u, pos, neg});
  }
  return out;
}

StepLosses train_step(ModelParams& model, const InteractionGraph& train_graph,
                      const NormalizedAdjacency& adj, const std::vector<Edge>& candidates,
                      std::uint64_t step) {
  const TrainConfig& cfg = model.config;
  const std::size_t users = model.users;
  const std::vector<Triplet3> batch =
      sample_triplets(train_graph, cfg.batch_size, derive_seed(cfg.seed, "triplets", step));

  ad::Tape tape;
  ad::Var h0 = tape.parameter(model.embeddings);
  EncoderVars enc = EncoderVars::bind(tape, model.encoder);
  AugmentorVars aug = AugmentorVars::bind(tape, model.augmentor);
  std::vector<ad::Var> params{h0};
  for (const auto& layer : enc.weights) params.insert(params.end(), layer.begin(), layer.end());
  params.insert(params.end(), {aug.w1, aug.b1, aug.w2, aug.b2});

  // Encode the original graph; these embeddings score BPR and feed the augmentor.
  ad::Var z = encode(Propagator::fixed(adj), h0, enc).embeddings;

  ad::Var gib_var, cl_var;
  if (cfg.beta1 > 0.0 || cfg.beta2 > 0.0) {
    EdgeProbabilities probs =
        edge_probability(z, candidates, users, aug, derive_seed(cfg.seed, "masks", step));
    const AugmentorConfig acfg = cfg.augmentor();
    AugmentedView v1 = sample_view(probs, candidates, users, model.items, acfg,
                                   derive_seed(cfg.seed, "gumbel", 2 * step));
    AugmentedView v2 = sample_view(probs, candidates, users, model.items, acfg,
                                   derive_seed(cfg.seed, "gumbel", 2 * step + 1));
    ad::Var input = cfg.view_input == ViewInput::Initial ? h0 : probs.perturbed;
    ad::Var z1 = encode(v1.propagator(), input, enc).embeddings;
    ad::Var z2 = encode(v2.propagator(), input, enc).embeddings;

    if (cfg.beta1 > 0.0) {
      GibConfig gcfg{cfg.kl_beta, cfg.likelihood_views};
      gib_var = gib_loss(z, z1, z2, batch, users, gcfg).total;
    }
    if (cfg.beta2 > 0.0) {
      std::vector<std::uint32_t> user_rows, item_rows;
      if (cfg.negatives == NegativeSet::Full) {
        for (std::size_t u = 0; u < users; ++u) user_rows.push_back(static_cast<std::uint32_t>(u));
        for (std::size_t v = 0; v < model.items; ++v) item_rows.push_back(static_cast<std::uint32_t>(users + v));
      } else {
        std::set<std::uint32_t> us, vs;
        for (const Triplet3& t : batch) {
          us.insert(t.user);
          vs.insert(static_cast<std::uint32_t>(users + t.positive));
          vs.insert(static_cast<std::uint32_t>(users + t.negative));
        }
        user_rows.assign(us.begin(), us.end());
        item_rows.assign(vs.begin(), vs.end());
      }
      cl_var = infonce(z1, z2, user_rows, item_rows, cfg.temperature);
    }
  }

  ad::Var bpr_var = bpr(z, batch, users);
  ad::Var total = joint_loss(bpr_var, gib_var, cl_var, params, cfg.weights());

  StepLosses losses;
  losses.bpr = bpr_var.value().item();
  losses.gib = gib_var.valid() ? gib_var.value().item() : 0.0;
  losses.cl = cl_var.valid() ? cl_var.value().item() : 0.0;
  losses.total = total.value().item();
  if (!std::isfinite(losses.total)) throw NumericError("non-finite joint loss");

  const ad::Gradients grads = tape.backward(total);
  std::vector<DenseMatrix> g;
  g.reserve(params.size());
  for (ad::Var p : params) g.push_back(grads[p]);
  if (cfg.optimizer == OptimizerKind::Adam) adam_update(model, g);
  else sgd_update(model, g);
  if (!model.all_finite()) throw NumericError("non-finite parameters after update");
  return losses;
}

TrainResult train(const InteractionGraph& train_graph, ModelParams model) {
  model.config.validate();
  if (train_graph.empty()) throw ContractViolation("train: empty training set");
  if (train_graph.user_count() != model.users || train_graph.item_count() != model.items)
    throw ContractViolation("train: model shape does not match the graph");

  const TrainConfig& cfg = model.config;
  const NormalizedAdjacency adj = normalize_adjacency(train_graph);
  const std::vector<Edge> candidates =
      candidate_edges(train_graph, cfg.candidates, cfg.candidate_budget, cfg.seed);

  TrainResult result;
  for (std::size_t e = 0; e < cfg.epochs; ++e) {
    const std::size_t epoch = model.epochs_done + 1;
    EpochRecord rec;
    rec.epoch = epoch;
    rec.lr = model.learning_rate;
    for (std::size_t s = 0; s < cfg.steps_per_epoch; ++s) {
      const std::uint64_t step = (epoch - 1) * cfg.steps_per_epoch + s;
      StepLosses l;
      try {
        l = train_step(model, train_graph, adj, candidates, step);
      } catch (const NumericError& err) {
        throw NumericError("epoch " + std::to_string(epoch) + " step " + std::to_string(s) + ": " +
                           err.what());
      }
      rec.l_bpr += l.bpr;
      rec.l_kl += l.gib;
      rec.l_cl += l.cl;
      rec.l_total += l.total;
    }
    const double n = static_cast<double>(cfg.steps_per_epoch);
    rec.l_bpr /= n;
    rec.l_kl /= n;
    rec.l_cl /= n;
    rec.l_total /= n;
    result.log.push_back(rec);
    model.learning_rate *= cfg.lr_decay;
    model.epochs_done = epoch;
  }
  result.model = std::move(model);
  return result;
}

TrainResult train(const InteractionGraph& train_graph, const TrainConfig& config) {
  return train(train_graph, ModelParams::init(config, train_graph.user_count(), train_graph.item_count()));
}

// ---------------------------------------------------------------------------
// Logs and checkpoints

void write_epoch_log(const std::vector<EpochRecord>& log, std::ostream& out) {
  out << "epoch\tl_bpr\tl_kl\tl_cl\tl_total\tlr\n";
  for (const EpochRecord& r : log) {
    out << r.epoch << '\t' << format_double(r.l_bpr) << '\t' << format_double(r.l_kl) << '\t'
        << format_double(r.l_cl) << '\t' << format_double(r.l_total) << '\t' << format_double(r.lr)
        << '\n';
  }
}

std::vector<EpochRecord> read_epoch_log(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "epoch\tl_bpr\tl_kl\tl_cl\tl_total\tlr")
    throw ParseError("epoch log: missing header", 1);
  std::vector<EpochRecord> out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream f(line);
    std::string c[6];
    for (auto& s : c)
      if (!std::getline(f, s, '\t')) throw ParseError("epoch log: expected 6 fields", lineno);
    EpochRecord r;
    r.epoch = static_cast<std::size_t>(parse_int(c[0], "epoch"));
    r.l_bpr = parse_double(c[1], "l_bpr");
    r.l_kl = parse_double(c[2], "l_kl");
    r.l_cl = parse_double(c[3], "l_cl");
    r.l_total = parse_double(c[4], "l_total");
    r.lr = parse_double(c[5], "lr");
    out.push_back(r);
  }
  return out;
}

namespace {

void write_tensor(std::ostream& out, const std::string& name, const DenseMatrix& m) {
  out << "tensor " << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) out << (c ? " " : "") << hex(m(r, c));
    out << '\n';
  }
}

DenseMatrix read_tensor(std::istream& in, const std::string& expected) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("checkpoint: missing tensor " + expected);
  std::istringstream h(line);
  std::string tag, name;
  std::size_t rows = 0, cols = 0;
  if (!(h >> tag >> name >> rows >> cols) || tag != "tensor" || name != expected)
    throw ParseError("checkpoint: expected tensor " + expected + ", got '" + line + "'");
  DenseMatrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    if (!std::getline(in, line)) throw ParseError("checkpoint: truncated tensor " + name);
    std::istringstream f(line);
    std::string tok;
    for (std::size_t c = 0; c < cols; ++c) {
      if (!(f >> tok)) throw ParseError("checkpoint: short row in tensor " + name);
      m(r, c) = unhex(tok);
    }
  }
  return m;
}

std::vector<std::string> tensor_names(const ModelParams& m) {
  std::vector<std::string> names{"embeddings"};
  for (std::size_t l = 0; l < m.encoder.weights.size(); ++l)
    for (std::size_t k = 0; k < m.encoder.weights[l].size(); ++k)
      names.push_back("encoder.l" + std::to_string(l) + ".h" + std::to_string(k));
  for (const char* n : {"augmentor.w1", "augmentor.b1", "augmentor.w2", "augmentor.b2"}) names.push_back(n);
  return names;
}

std::string read_block(std::istream& in, const std::string& begin, const std::string& end) {
  std::string line;
  if (!std::getline(in, line) || line != begin) throw ParseError("checkpoint: expected " + begin);
  std::string text;
  while (std::getline(in, line)) {
    if (line == end) return text;
    text += line + '\n';
  }
  throw ParseError("checkpoint: missing " + end);
}

}  // namespace

void save_checkpoint(const ModelParams& model, const KeyValueConfig& meta, std::ostream& out) {
  out << "graphaug-checkpoint 1\n";
  out << "users " << model.users << '\n';
  out << "items " << model.items << '\n';
  out << "learning_rate " << hex(model.learning_rate) << '\n';
  out << "epochs_done " << model.epochs_done << '\n';
  out << "adam_step " << model.adam.step << '\n';
  KeyValueConfig cfg;
  model.config.store(cfg);
  out << "config-begin\n";
  cfg.write(out);
  out << "config-end\n";
  out << "meta-begin\n";
  meta.write(out);
  out << "meta-end\n";
  const auto names = tensor_names(model);
  const auto tensors = model.tensors();
  for (std::size_t i = 0; i < tensors.size(); ++i) write_tensor(out, names[i], *tensors[i]);
  out << "adam " << model.adam.first.size() << '\n';
  for (std::size_t i = 0; i < model.adam.first.size(); ++i) {
    write_tensor(out, "adam.m" + std::to_string(i), model.adam.first[i]);
    write_tensor(out, "adam.v" + std::to_string(i), model.adam.second[i]);
  }
  out << "end\n";
}

ModelParams load_checkpoint(std::istream& in, KeyValueConfig* meta) {
  std::string line;
  if (!std::getline(in, line) || line != "graphaug-checkpoint 1")
    throw ParseError("checkpoint: unrecognized header", 1);
  auto field = [&](const std::string& key) {
    if (!std::getline(in, line) || line.rfind(key + ' ', 0) != 0)
      throw ParseError("checkpoint: expected field " + key);
    return line.substr(key.size() + 1);
  };
  ModelParams m;
  m.users = static_cast<std::size_t>(parse_int(field("users"), "users"));
  m.items = static_cast<std::size_t>(parse_int(field("items"), "items"));
  m.learning_rate = unhex(field("learning_rate"));
  m.epochs_done = static_cast<std::size_t>(parse_int(field("epochs_done"), "epochs_done"));
  m.adam.step = static_cast<std::uint64_t>(parse_int(field("adam_step"), "adam_step"));
  {
    std::istringstream block(read_block(in, "config-begin", "config-end"));
    m.config = TrainConfig::load(KeyValueConfig::parse(block));
  }
  {
    std::istringstream block(read_block(in, "meta-begin", "meta-end"));
    KeyValueConfig parsed = KeyValueConfig::parse(block);
    if (meta) *meta = std::move(parsed);
  }
  // Shapes come from a fresh initialization of the stored config.
  ModelParams shape = ModelParams::init(m.config, m.users, m.items);
  m.embeddings = std::move(shape.embeddings);
  m.encoder = std::move(shape.encoder);
  m.augmentor = std::move(shape.augmentor);
  const auto names = tensor_names(m);
  auto tensors = m.tensors();
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    DenseMatrix t = read_tensor(in, names[i]);
    if (!t.same_shape(*tensors[i])) throw ParseError("checkpoint: tensor " + names[i] + " has wrong shape");
    *tensors[i] = std::move(t);
  }
  const std::size_t adam_count = static_cast<std::size_t>(parse_int(field("adam"), "adam"));
  for (std::size_t i = 0; i < adam_count; ++i) {
    m.adam.first.push_back(read_tensor(in, "adam.m" + std::to_string(i)));
    m.adam.second.push_back(read_tensor(in, "adam.v" + std::to_string(i)));
  }
  if (!std::getline(in, line) || line != "end") throw ParseError("checkpoint: missing end marker");
  return m;
}

}  // namespace graphaug
