#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "graphaug/augmentor.hpp"
#include "graphaug/config.hpp"
#include "graphaug/encoder.hpp"
#include "graphaug/gib.hpp"
#include "graphaug/graph.hpp"
#include "graphaug/objectives.hpp"

namespace graphaug {

enum class OptimizerKind { Sgd, Adam };
enum class NegativeSet { InBatch, Full };
/// Input embeddings of the two augmented-view encodings.
enum class ViewInput { Initial, Perturbed };

struct TrainConfig {
  std::size_t dim = 32;
  std::size_t layers = 2;
  std::vector<int> hops{0, 1, 2};
  double slope = 0.5;
  Readout readout = Readout::LayerMean;

  double temperature = 0.9;         ///< InfoNCE tau
  double gumbel_temperature = 1.0;  ///< tau1
  double threshold = 0.2;           ///< xi
  double keep_probability = 0.8;    ///< node mask keep rate
  CandidatePolicy candidates = CandidatePolicy::Observed;
  double candidate_budget = 0.0;

  double beta1 = 1e-5;  ///< GIB weight
  double beta2 = 1.0;   ///< contrastive weight
  double beta3 = 1e-7;  ///< squared-norm weight
  double kl_beta = 1.0; ///< Lagrange weight inside the GIB term
  LikelihoodViews likelihood_views = LikelihoodViews::Both;
  NegativeSet negatives = NegativeSet::InBatch;
  ViewInput view_input = ViewInput::Initial;

  double learning_rate = 0.001;
  double lr_decay = 0.96;  ///< per-epoch learning-rate multiplier
  OptimizerKind optimizer = OptimizerKind::Sgd;
  std::size_t epochs = 50;
  std::size_t batch_size = 1024;
  std::size_t steps_per_epoch = 1;
  std::uint64_t seed = 1;

  void validate() const;
  EncoderConfig encoder() const;
  AugmentorConfig augmentor() const;
  LossWeights weights() const { return {beta1, beta2, beta3}; }

  /// Writes every field into `section`.
  void store(KeyValueConfig& cfg, const std::string& section = "train") const;
  /// Reads fields present in `section`; absent keys keep their defaults.
  /// Unknown keys raise ConfigError.
  static TrainConfig load(const KeyValueConfig& cfg, const std::string& section = "train");

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

struct AdamState {
  std::vector<DenseMatrix> first;
  std::vector<DenseMatrix> second;
  std::uint64_t step = 0;

  friend bool operator==(const AdamState&, const AdamState&) = default;
};

/// All trainable state: the embedding table, encoder weights, edge scorer,
/// plus optimizer bookkeeping.
struct ModelParams {
  TrainConfig config;
  std::size_t users = 0;
  std::size_t items = 0;
  DenseMatrix embeddings;  ///< (I+J) x d
  EncoderParams encoder;
  AugmentorParams augmentor;
  AdamState adam;
  double learning_rate = 0.0;
  std::size_t epochs_done = 0;

  static ModelParams init(const TrainConfig& config, std::size_t users, std::size_t items);

  /// Trainable tensors in a fixed order.
  std::vector<DenseMatrix*> tensors();
  std::vector<const DenseMatrix*> tensors() const;
  bool all_finite() const;

  friend bool operator==(const ModelParams& a, const ModelParams& b);
};

/// Readout embeddings of the encoder on the (un-augmented) graph.
DenseMatrix final_embeddings(const ModelParams& model, const NormalizedAdjacency& adj);

/// B triplets: users drawn uniformly among those with a training
/// interaction (resampling users who interacted with every item), positive
/// uniform over the user's items, negative by rejection sampling.
std::vector<Triplet3> sample_triplets(const InteractionGraph& train, std::size_t batch,
                                      std::uint64_t seed);

struct EpochRecord {
  std::size_t epoch = 0;
  double l_bpr = 0.0;
  double l_kl = 0.0;
  double l_cl = 0.0;
  double l_total = 0.0;
  double lr = 0.0;

  friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

struct TrainResult {
  ModelParams model;
  std::vector<EpochRecord> log;
};

/// One joint step's losses, exposed for tests and tooling.
struct StepLosses {
  double bpr = 0.0;
  double gib = 0.0;
  double cl = 0.0;
  double total = 0.0;
};

/// Runs the joint training loop. Per step: encode the graph, score and
/// sample two views, encode them, pool the posterior, then the GIB,
/// contrastive and BPR terms, and apply one optimizer update. The learning
/// rate decays once per epoch. Throws NumericError with epoch/step context
/// on a non-finite loss and ContractViolation on an empty training set.
TrainResult train(const InteractionGraph& train_graph, const TrainConfig& config);

/// Continues training an existing model for `config.epochs` more epochs.
TrainResult train(const InteractionGraph& train_graph, ModelParams model);

/// The single step used by train(); `step` indexes the random sub-streams.
StepLosses train_step(ModelParams& model, const InteractionGraph& train_graph,
                      const NormalizedAdjacency& adj, const std::vector<Edge>& candidates,
                      std::uint64_t step);

void write_epoch_log(const std::vector<EpochRecord>& log, std::ostream& out);
std::vector<EpochRecord> read_epoch_log(std::istream& in);

/// Text checkpoint with hexadecimal floats, so a reload is bit-exact.
/// `meta` is stored alongside (run/data settings needed to re-evaluate).
void save_checkpoint(const ModelParams& model, const KeyValueConfig& meta, std::ostream& out);
ModelParams load_checkpoint(std::istream& in, KeyValueConfig* meta = nullptr);

}  // namespace graphaug
