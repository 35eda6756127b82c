#include "graphaug/graph.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "graphaug/errors.hpp"
#include "graphaug/rng.hpp"

namespace graphaug {

InteractionGraph::InteractionGraph(std::size_t users, std::size_t items, std::vector<Edge> edges)
    : users_(users), items_(items), edges_(std::move(edges)) {
  for (const Edge& e : edges_) {
    if (e.user >= users_ || e.item >= items_) {
      throw ContractViolation("InteractionGraph: edge (" + std::to_string(e.user) + "," +
                              std::to_string(e.item) + ") outside " + std::to_string(users_) +
                              "x" + std::to_string(items_));
    }
  }
  std::sort(edges_.begin(), edges_.end());
  edges_.erase(std::unique(edges_.begin(), edges_.end()), edges_.end());

  std::vector<std::size_t> offsets(users_ + 1, 0);
  std::vector<std::uint32_t> columns;
  columns.reserve(edges_.size());
  for (const Edge& e : edges_) {
    ++offsets[e.user + 1];
    columns.push_back(e.item);
  }
  for (std::size_t u = 0; u < users_; ++u) offsets[u + 1] += offsets[u];
  adjacency_ = SparseMatrix(users_, items_, std::move(offsets), std::move(columns),
                            std::vector<double>(edges_.size(), 1.0));
}

std::span<const std::uint32_t> InteractionGraph::items_of(std::size_t user) const {
  const auto& off = adjacency_.offsets();
  return {adjacency_.columns().data() + off[user], off[user + 1] - off[user]};
}

std::size_t InteractionGraph::user_degree(std::size_t user) const {
  const auto& off = adjacency_.offsets();
  return off[user + 1] - off[user];
}

std::vector<std::size_t> InteractionGraph::item_degrees() const {
  std::vector<std::size_t> deg(items_, 0);
  for (const Edge& e : edges_) ++deg[e.item];
  return deg;
}

bool InteractionGraph::contains(std::uint32_t user, std::uint32_t item) const {
  if (user >= users_) return false;
  const auto items = items_of(user);
  return std::binary_search(items.begin(), items.end(), item);
}

void InteractionGraph::set_ids(std::vector<std::string> users, std::vector<std::string> items) {
  if (users.size() != users_ || items.size() != items_)
    throw ContractViolation("set_ids: id table sizes do not match the graph");
  user_ids_ = std::move(users);
  item_ids_ = std::move(items);
}

DatasetStats compute_stats(std::size_t users, std::size_t items, std::size_t interactions) {
  if (users == 0 || items == 0 || interactions == 0)
    throw ContractViolation("compute_stats: counts must be positive");
  if (interactions > users * items)
    throw ContractViolation("compute_stats: more interactions than user-item pairs");
  DatasetStats s;
  s.users = users;
  s.items = items;
  s.interactions = interactions;
  s.density = static_cast<double>(interactions) /
              (static_cast<double>(users) * static_cast<double>(items));
  return s;
}

DatasetStats compute_stats(const InteractionGraph& g) {
  return compute_stats(g.user_count(), g.item_count(), g.edge_count());
}

std::string format_two_sig(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.1e", value);
  // "%.1e" yields e.g. "4.0e-04"; drop the exponent's zero padding.
  std::string s(buf);
  const auto e = s.find('e');
  if (e == std::string::npos) return s;
  std::string mant = s.substr(0, e);
  std::string exp = s.substr(e + 1);
  std::string sign;
  if (!exp.empty() && (exp[0] == '-' || exp[0] == '+')) {
    if (exp[0] == '-') sign = "-";
    exp.erase(0, 1);
  }
  exp.erase(0, std::min(exp.find_first_not_of('0'), exp.size() - 1));
  return mant + "e" + sign + exp;
}

InteractionGraph ingest(std::istream& in) {
  std::unordered_map<std::string, std::uint32_t> user_index, item_index;
  std::vector<std::string> user_ids, item_ids;
  std::vector<Edge> edges;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream fields(line);
    std::string user, item, weight, extra;
    fields >> user >> item;
    if (item.empty()) throw ParseError("expected 'user item [weight]'", lineno);
    if (fields >> weight) {
      char* end = nullptr;
      std::strtod(weight.c_str(), &end);
      if (end == weight.c_str() || *end != '\0')
        throw ParseError("weight '" + weight + "' is not a number", lineno);
      if (fields >> extra) throw ParseError("too many fields", lineno);
    }
    auto [uit, unew] = user_index.try_emplace(user, static_cast<std::uint32_t>(user_ids.size()));
    if (unew) user_ids.push_back(user);
    auto [iit, inew] = item_index.try_emplace(item, static_cast<std::uint32_t>(item_ids.size()));
    if (inew) item_ids.push_back(item);
    edges.push_back({uit->second, iit->second});
  }
  if (in.bad()) throw ParseError("read failure", lineno);
  if (edges.empty()) throw EmptyDatasetError("dataset contains no interactions");
  InteractionGraph g(user_ids.size(), item_ids.size(), std::move(edges));
  g.set_ids(std::move(user_ids), std::move(item_ids));
  return g;
}

InteractionGraph ingest_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");
  return ingest(in);
}

void serialize(const InteractionGraph& g, std::ostream& out) {
  out << g.user_count() << ' ' << g.item_count() << ' ' << g.edge_count() << '\n';
  for (const Edge& e : g.edges()) out << e.user << ' ' << e.item << '\n';
}

InteractionGraph deserialize(std::istream& in) {
  std::string line;
  std::size_t lineno = 0;
  auto next_line = [&]() -> bool {
    while (std::getline(in, line)) {
      ++lineno;
      if (line.find_first_not_of(" \t\r") != std::string::npos) return true;
    }
    return false;
  };
  if (!next_line()) throw EmptyDatasetError("serialized graph has no header");
  std::size_t users = 0, items = 0, count = 0;
  {
    std::istringstream h(line);
    if (!(h >> users >> items >> count)) throw ParseError("expected header 'I J E'", lineno);
  }
  std::vector<Edge> edges;
  edges.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    if (!next_line()) throw ParseError("expected " + std::to_string(count) + " edges", lineno);
    std::istringstream f(line);
    long long u = -1, v = -1;
    if (!(f >> u >> v) || u < 0 || v < 0 || static_cast<std::size_t>(u) >= users ||
        static_cast<std::size_t>(v) >= items)
      throw ParseError("bad edge line", lineno);
    edges.push_back({static_cast<std::uint32_t>(u), static_cast<std::uint32_t>(v)});
  }
  return InteractionGraph(users, items, std::move(edges));
}

BipartitePattern build_bipartite_pattern(std::size_t users, std::size_t items,
                                         std::span<const Edge> edges) {
  const std::size_t n = users + items;
  std::vector<Triplet> t;
  t.reserve(2 * edges.size() + n);
  for (const Edge& e : edges) {
    if (e.user >= users || e.item >= items) throw ContractViolation("pattern: edge out of range");
    const auto item_row = static_cast<std::uint32_t>(users + e.item);
    t.emplace_back(e.user, item_row, 1.0);
    t.emplace_back(item_row, e.user, 1.0);
  }
  for (std::size_t i = 0; i < n; ++i)
    t.emplace_back(static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(i), 1.0);
  auto m = SparseMatrix::from_triplets(n, n, std::move(t));
  if (m.nnz() != 2 * edges.size() + n) throw ContractViolation("pattern: duplicate edges");
  for (double& v : m.values()) v = 1.0;

  BipartitePattern bp;
  bp.upper.reserve(edges.size());
  bp.lower.reserve(edges.size());
  for (const Edge& e : edges) {
    bp.upper.push_back(static_cast<std::uint32_t>(m.find(e.user, users + e.item)));
    bp.lower.push_back(static_cast<std::uint32_t>(m.find(users + e.item, e.user)));
  }
  bp.diagonal.reserve(n);
  for (std::size_t i = 0; i < n; ++i) bp.diagonal.push_back(static_cast<std::uint32_t>(m.find(i, i)));
  bp.pattern = std::make_shared<const SparseMatrix>(std::move(m));
  return bp;
}

NormalizedAdjacency normalize_adjacency(const InteractionGraph& g) {
  const std::size_t users = g.user_count();
  const std::size_t n = g.node_count();
  BipartitePattern bp = build_bipartite_pattern(users, g.item_count(), g.edges());

  NormalizedAdjacency out;
  out.users = users;
  out.items = g.item_count();
  out.degree.assign(n, 1.0);
  for (const Edge& e : g.edges()) {
    out.degree[e.user] += 1.0;
    out.degree[users + e.item] += 1.0;
  }
  SparseMatrix m = *bp.pattern;
  auto& vals = m.values();
  for (std::size_t k = 0; k < g.edges().size(); ++k) {
    const Edge& e = g.edges()[k];
    const double w = 1.0 / std::sqrt(out.degree[e.user] * out.degree[users + e.item]);
    vals[bp.upper[k]] = w;
    vals[bp.lower[k]] = w;
  }
  for (std::size_t i = 0; i < n; ++i) vals[bp.diagonal[i]] = 1.0 / out.degree[i];
  out.matrix = std::make_shared<const SparseMatrix>(std::move(m));
  return out;
}

std::size_t Split::test_edges() const {
  std::size_t n = 0;
  for (const auto& items : test) n += items.size();
  return n;
}

Split split(const InteractionGraph& g, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw ContractViolation("split: test fraction must lie in (0,1)");
  Rng rng = make_rng(seed, "split");
  Split s;
  s.test.assign(g.user_count(), {});
  std::vector<Edge> train;
  train.reserve(g.edge_count());
  for (std::size_t u = 0; u < g.user_count(); ++u) {
    const auto items = g.items_of(u);
    std::vector<std::uint32_t> order(items.begin(), items.end());
    std::size_t held = 0;
    if (order.size() >= 2) {
      std::shuffle(order.begin(), order.end(), rng);
      held = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(order.size())));
      held = std::min(held, order.size() - 1);
    }
    s.test[u].assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(held));
    std::sort(s.test[u].begin(), s.test[u].end());
    for (std::size_t k = held; k < order.size(); ++k)
      train.push_back({static_cast<std::uint32_t>(u), order[k]});
  }
  s.train = InteractionGraph(g.user_count(), g.item_count(), std::move(train));
  if (!g.user_ids().empty()) s.train.set_ids(g.user_ids(), g.item_ids());
  return s;
}

}  // namespace graphaug
