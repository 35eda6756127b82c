#include <benchmark/benchmark.h>

#include <random>

#include "graphaug/synthetic.hpp"
#include "graphaug/trainer.hpp"

using namespace graphaug;

namespace {

DenseMatrix random_dense(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  DenseMatrix m(rows, cols);
  for (double& v : m.values()) v = u(rng);
  return m;
}

// args: edges, dim; 1000 users x 1000 items
void BM_Spmm(benchmark::State& state) {
  const auto g = make_random_graph(1000, 1000, static_cast<std::size_t>(state.range(0)), 1);
  const auto adj = normalize_adjacency(g);
  const DenseMatrix x = random_dense(g.node_count(), static_cast<std::size_t>(state.range(1)), 2);
  for (auto _ : state) benchmark::DoNotOptimize(adj.matrix->multiply(x));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(adj.matrix->nnz()) * state.range(1));
}
BENCHMARK(BM_Spmm)->Args({1000, 32})->Args({10000, 32})->Args({100000, 32})->Args({10000, 64});

// forward + backward of the mixhop encoder; args: edges, layers
void BM_EncodeBackward(benchmark::State& state) {
  const auto g = make_random_graph(1000, 1000, static_cast<std::size_t>(state.range(0)), 1);
  const auto adj = normalize_adjacency(g);
  TrainConfig cfg;
  cfg.layers = static_cast<std::size_t>(state.range(1));
  const ModelParams m = ModelParams::init(cfg, 1000, 1000);
  for (auto _ : state) {
    ad::Tape t;
    ad::Var h0 = t.parameter(m.embeddings);
    const ad::Var z = encode(Propagator::fixed(adj), h0, EncoderVars::bind(t, m.encoder)).embeddings;
    benchmark::DoNotOptimize(t.backward(ad::sum(z)));
  }
}
BENCHMARK(BM_EncodeBackward)->Args({10000, 2})->Args({100000, 2})->Args({10000, 4})->Unit(benchmark::kMillisecond);

// one joint training epoch on the 200 x 200 block dataset
void BM_TrainEpoch(benchmark::State& state) {
  const auto g = make_block_dataset({});
  TrainConfig cfg;
  cfg.epochs = 1;
  cfg.batch_size = static_cast<std::size_t>(state.range(0));
  ModelParams m = ModelParams::init(cfg, g.user_count(), g.item_count());
  for (auto _ : state) m = train(g, std::move(m)).model;
}
BENCHMARK(BM_TrainEpoch)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
