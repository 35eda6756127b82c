#pragma once

#include <compare>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "graphaug/tensor.hpp"

namespace graphaug {

struct Edge {
  std::uint32_t user = 0;
  std::uint32_t item = 0;

  friend auto operator<=>(const Edge&, const Edge&) = default;
};

/// Bipartite implicit-feedback graph. Edges are unique and kept sorted by
/// (user, item); the I x J CSR adjacency mirrors them with value 1.
class InteractionGraph {
 public:
  InteractionGraph() = default;
  /// Validates index ranges; duplicate edges are collapsed.
  InteractionGraph(std::size_t users, std::size_t items, std::vector<Edge> edges);

  std::size_t user_count() const noexcept { return users_; }
  std::size_t item_count() const noexcept { return items_; }
  std::size_t node_count() const noexcept { return users_ + items_; }
  std::size_t edge_count() const noexcept { return edges_.size(); }
  bool empty() const noexcept { return edges_.empty(); }

  const std::vector<Edge>& edges() const noexcept { return edges_; }
  const SparseMatrix& adjacency() const noexcept { return adjacency_; }

  std::span<const std::uint32_t> items_of(std::size_t user) const;
  std::size_t user_degree(std::size_t user) const;
  std::vector<std::size_t> item_degrees() const;
  bool contains(std::uint32_t user, std::uint32_t item) const;

  /// Original identifiers (row -> id) when the graph came from ingest();
  /// empty otherwise.
  const std::vector<std::string>& user_ids() const noexcept { return user_ids_; }
  const std::vector<std::string>& item_ids() const noexcept { return item_ids_; }
  void set_ids(std::vector<std::string> users, std::vector<std::string> items);

  friend bool operator==(const InteractionGraph& a, const InteractionGraph& b) {
    return a.users_ == b.users_ && a.items_ == b.items_ && a.edges_ == b.edges_;
  }

 private:
  std::size_t users_ = 0;
  std::size_t items_ = 0;
  std::vector<Edge> edges_;
  SparseMatrix adjacency_;
  std::vector<std::string> user_ids_;
  std::vector<std::string> item_ids_;
};

struct DatasetStats {
  std::size_t users = 0;
  std::size_t items = 0;
  std::size_t interactions = 0;
  double density = 0.0;
};

DatasetStats compute_stats(std::size_t users, std::size_t items, std::size_t interactions);
DatasetStats compute_stats(const InteractionGraph& g);

/// Scientific notation with two significant figures and an unpadded
/// exponent, e.g. 4.0e-4.
std::string format_two_sig(double value);

/// Reads "user item [weight]" lines. Ids are re-indexed densely in
/// first-seen order; weights are ignored; '#' lines and blank lines are
/// skipped. Throws ParseError (with line number) or EmptyDatasetError.
InteractionGraph ingest(std::istream& in);
InteractionGraph ingest_file(const std::string& path);

/// "I J E" header followed by E lines of dense "user item" indices.
void serialize(const InteractionGraph& g, std::ostream& out);
InteractionGraph deserialize(std::istream& in);

/// Symmetric (I+J) x (I+J) sparsity pattern of a bipartite edge list with
/// self-loops on every node, together with where each logical entry sits in
/// the CSR value array. Items occupy rows I..I+J-1.
struct BipartitePattern {
  std::shared_ptr<const SparseMatrix> pattern;  // values are all 1
  std::vector<std::uint32_t> upper;             // position of (u, I+v) per edge
  std::vector<std::uint32_t> lower;             // position of (I+v, u) per edge
  std::vector<std::uint32_t> diagonal;          // position of (n, n) per node
};

BipartitePattern build_bipartite_pattern(std::size_t users, std::size_t items,
                                         std::span<const Edge> edges);

struct NormalizedAdjacency {
  std::shared_ptr<const SparseMatrix> matrix;
  std::size_t users = 0;
  std::size_t items = 0;
  bool self_loops = true;
  /// Self-loop-augmented degree per node (1 + interaction count).
  std::vector<double> degree;
};

/// D^{-1/2} (A + I) D^{-1/2} over the (I+J)-node symmetric block matrix.
NormalizedAdjacency normalize_adjacency(const InteractionGraph& g);

/// Per-user held-out items, sorted ascending. Indexed by user.
using TestSet = std::vector<std::vector<std::uint32_t>>;

struct Split {
  InteractionGraph train;
  TestSet test;
  std::size_t test_edges() const;
};

/// Random per-user holdout. Users with a single interaction stay entirely in
/// train; every user keeps at least one training interaction.
Split split(const InteractionGraph& g, double test_fraction, std::uint64_t seed);

}  // namespace graphaug
