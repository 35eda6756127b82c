#pragma once

#include <cstdint>

#include "graphaug/graph.hpp"

namespace graphaug {

/// Community-structured interaction data: users and items are split into
/// equal contiguous blocks and users interact mostly inside their own block.
struct BlockDatasetSpec {
  std::size_t users = 200;
  std::size_t items = 200;
  std::size_t blocks = 5;
  std::size_t min_interactions = 8;
  std::size_t max_interactions = 30;
  /// Fraction of each user's interactions drawn uniformly outside the block.
  double noise = 0.05;
  std::uint64_t seed = 1;
};

InteractionGraph make_block_dataset(const BlockDatasetSpec& spec);

/// Uniform random bipartite graph with exactly `edges` distinct edges.
InteractionGraph make_random_graph(std::size_t users, std::size_t items, std::size_t edges,
                                   std::uint64_t seed);

}  // namespace graphaug
