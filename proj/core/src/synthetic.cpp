#include "graphaug/synthetic.hpp"

#include <algorithm>
#include <random>
#include <set>

#include "graphaug/errors.hpp"
#include "graphaug/rng.hpp"

namespace graphaug {

InteractionGraph make_block_dataset(const BlockDatasetSpec& spec) {
  if (spec.blocks == 0 || spec.users < spec.blocks || spec.items < spec.blocks)
    throw ConfigError("block dataset: need at least one user and item per block");
  if (spec.min_interactions == 0 || spec.min_interactions > spec.max_interactions)
    throw ConfigError("block dataset: bad interaction range");
  const std::size_t block_items = spec.items / spec.blocks;
  if (spec.max_interactions > block_items)
    throw ConfigError("block dataset: max interactions exceeds block size");

  Rng rng = make_rng(spec.seed, "block-dataset");
  std::uniform_int_distribution<std::size_t> count(spec.min_interactions, spec.max_interactions);
  std::uniform_int_distribution<std::uint32_t> any_item(0, static_cast<std::uint32_t>(spec.items - 1));
  std::bernoulli_distribution off_block(spec.noise);

  std::vector<Edge> edges;
  for (std::size_t u = 0; u < spec.users; ++u) {
    const std::size_t block = u * spec.blocks / spec.users;
    const std::size_t lo = block * block_items;
    std::uniform_int_distribution<std::uint32_t> in_block(
        static_cast<std::uint32_t>(lo), static_cast<std::uint32_t>(lo + block_items - 1));
    const std::size_t k = count(rng);
    std::set<std::uint32_t> chosen;
    while (chosen.size() < k) chosen.insert(off_block(rng) ? any_item(rng) : in_block(rng));
    for (std::uint32_t v : chosen) edges.push_back({static_cast<std::uint32_t>(u), v});
  }
  return InteractionGraph(spec.users, spec.items, std::move(edges));
}

InteractionGraph make_random_graph(std::size_t users, std::size_t items, std::size_t edges,
                                   std::uint64_t seed) {
  if (edges > users * items) throw ConfigError("random graph: more edges than pairs");
  Rng rng = make_rng(seed, "random-graph");
  std::uniform_int_distribution<std::uint32_t> pick_user(0, static_cast<std::uint32_t>(users - 1));
  std::uniform_int_distribution<std::uint32_t> pick_item(0, static_cast<std::uint32_t>(items - 1));
  std::set<Edge> chosen;
  while (chosen.size() < edges) chosen.insert({pick_user(rng), pick_item(rng)});
  return InteractionGraph(users, items, {chosen.begin(), chosen.end()});
}

}  // namespace graphaug
