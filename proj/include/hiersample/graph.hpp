#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <queue>
#include <span>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "hiersample/errors.hpp"

namespace hiersample {

using NodeIndex = std::uint32_t;
using AttrCode = std::int32_t;

struct Edge {
  NodeIndex u = 0;
  NodeIndex v = 0;

  friend bool operator==(const Edge&, const Edge&) = default;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

// Hop distance; kUnreachable marks pairs in different components.
using HopDistance = std::uint32_t;
inline constexpr HopDistance kUnreachable = std::numeric_limits<HopDistance>::max();

/// Undirected simple graph with fixed-arity categorical node and edge attributes.
///
/// Edges are canonicalized on construction: each edge is stored with u < v,
/// duplicates (including reversed copies) are dropped keeping the first
/// occurrence's attributes, and the list is sorted lexicographically.
/// Instances are immutable.
class AttributedGraph {
 public:
  struct Neighbor {
    NodeIndex node;
    std::uint32_t edge;  // index into edges()
  };

  AttributedGraph() = default;

  AttributedGraph(std::string id, std::size_t node_count, std::vector<Edge> edges,
                  std::vector<std::vector<AttrCode>> node_attrs = {},
                  std::vector<std::vector<AttrCode>> edge_attrs = {})
      : id_(std::move(id)), node_count_(node_count) {
    if (!node_attrs.empty() && node_attrs.size() != node_count) {
      throw DataError("graph '" + id_ + "': node_attrs has " + std::to_string(node_attrs.size()) +
                      " rows for " + std::to_string(node_count) + " nodes");
    }
    if (!edge_attrs.empty() && edge_attrs.size() != edges.size()) {
      throw DataError("graph '" + id_ + "': edge_attrs has " + std::to_string(edge_attrs.size()) +
                      " rows for " + std::to_string(edges.size()) + " edges");
    }
    node_arity_ = node_attrs.empty() ? 0 : node_attrs.front().size();
    edge_arity_ = edge_attrs.empty() ? 0 : edge_attrs.front().size();

    node_attrs_.reserve(node_count * node_arity_);
    for (const auto& row : node_attrs) {
      if (row.size() != node_arity_) {
        throw DataError("graph '" + id_ + "': node attribute rows have differing arity");
      }
      node_attrs_.insert(node_attrs_.end(), row.begin(), row.end());
    }

    struct Pending {
      Edge e;
      std::size_t order;
    };
    std::vector<Pending> pending;
    pending.reserve(edges.size());
    for (std::size_t k = 0; k < edges.size(); ++k) {
      Edge e = edges[k];
      if (e.u >= node_count || e.v >= node_count) {
        throw DataError("graph '" + id_ + "': node index out of range in edge [" +
                        std::to_string(e.u) + "," + std::to_string(e.v) + "]");
      }
      if (e.u == e.v) {
        throw DataError("graph '" + id_ + "': self-loop on node " + std::to_string(e.u));
      }
      if (!edge_attrs.empty() && edge_attrs[k].size() != edge_arity_) {
        throw DataError("graph '" + id_ + "': edge attribute rows have differing arity");
      }
      if (e.u > e.v) std::swap(e.u, e.v);
      pending.push_back({e, k});
    }
    std::stable_sort(pending.begin(), pending.end(),
                     [](const Pending& a, const Pending& b) { return a.e < b.e; });
    for (std::size_t k = 0; k < pending.size(); ++k) {
      if (k > 0 && pending[k].e == pending[k - 1].e) continue;
      edges_.push_back(pending[k].e);
      if (edge_arity_ > 0) {
        const auto& row = edge_attrs[pending[k].order];
        edge_attrs_.insert(edge_attrs_.end(), row.begin(), row.end());
      }
    }
    build_adjacency();
  }

  const std::string& id() const noexcept { return id_; }
  std::size_t node_count() const noexcept { return node_count_; }
  std::size_t edge_count() const noexcept { return edges_.size(); }
  std::span<const Edge> edges() const noexcept { return edges_; }
  std::size_t node_arity() const noexcept { return node_arity_; }
  std::size_t edge_arity() const noexcept { return edge_arity_; }
  bool attributed() const noexcept { return node_arity_ > 0; }

  std::span<const AttrCode> node_attrs(NodeIndex v) const {
    return {node_attrs_.data() + static_cast<std::size_t>(v) * node_arity_, node_arity_};
  }
  std::span<const AttrCode> edge_attrs(std::size_t e) const {
    return {edge_attrs_.data() + e * edge_arity_, edge_arity_};
  }
  // Position-0 node attribute ("primary type", e.g. the atom type).
  AttrCode primary_type(NodeIndex v) const { return node_attrs_.at(static_cast<std::size_t>(v) * node_arity_); }

  std::span<const Neighbor> neighbors(NodeIndex v) const {
    return {adjacency_.data() + offsets_[v], offsets_[v + 1] - offsets_[v]};
  }
  std::size_t degree(NodeIndex v) const { return offsets_[v + 1] - offsets_[v]; }

  std::vector<std::vector<AttrCode>> node_attr_rows() const {
    std::vector<std::vector<AttrCode>> rows;
    if (node_arity_ == 0) return rows;
    for (NodeIndex v = 0; v < node_count_; ++v) {
      auto a = node_attrs(v);
      rows.emplace_back(a.begin(), a.end());
    }
    return rows;
  }
  std::vector<std::vector<AttrCode>> edge_attr_rows() const {
    std::vector<std::vector<AttrCode>> rows;
    if (edge_arity_ == 0) return rows;
    for (std::size_t e = 0; e < edges_.size(); ++e) {
      auto a = edge_attrs(e);
      rows.emplace_back(a.begin(), a.end());
    }
    return rows;
  }

  AttributedGraph with_id(std::string id) const {
    AttributedGraph copy = *this;
    copy.id_ = std::move(id);
    return copy;
  }

 private:
  void build_adjacency() {
    offsets_.assign(node_count_ + 1, 0);
    for (const auto& e : edges_) {
      ++offsets_[e.u + 1];
      ++offsets_[e.v + 1];
    }
    for (std::size_t v = 0; v < node_count_; ++v) offsets_[v + 1] += offsets_[v];
    adjacency_.resize(offsets_.back());
    std::vector<std::size_t> fill(offsets_.begin(), offsets_.end() - 1);
    for (std::uint32_t k = 0; k < edges_.size(); ++k) {
      adjacency_[fill[edges_[k].u]++] = {edges_[k].v, k};
      adjacency_[fill[edges_[k].v]++] = {edges_[k].u, k};
    }
    for (std::size_t v = 0; v < node_count_; ++v) {
      std::sort(adjacency_.begin() + static_cast<std::ptrdiff_t>(offsets_[v]),
                adjacency_.begin() + static_cast<std::ptrdiff_t>(offsets_[v + 1]),
                [](const Neighbor& a, const Neighbor& b) { return a.node < b.node; });
    }
  }

  std::string id_;
  std::size_t node_count_ = 0;
  std::size_t node_arity_ = 0;
  std::size_t edge_arity_ = 0;
  std::vector<Edge> edges_;
  std::vector<AttrCode> node_attrs_;
  std::vector<AttrCode> edge_attrs_;
  std::vector<std::size_t> offsets_{0};
  std::vector<Neighbor> adjacency_;
};

struct GraphDataset {
  std::vector<AttributedGraph> graphs;
  // Per attribute position: codes are < vocab size. Code == vocab size is the MASK code.
  std::vector<AttrCode> node_vocab;
  std::vector<AttrCode> edge_vocab;
  std::string name;
  std::string source;

  std::size_t size() const noexcept { return graphs.size(); }
  const AttributedGraph& operator[](std::size_t i) const { return graphs[i]; }
};

namespace detail {

inline void grow_vocab(std::vector<AttrCode>& vocab, std::span<const AttrCode> row, const std::string& id) {
  if (vocab.size() < row.size()) vocab.resize(row.size(), 0);
  for (std::size_t p = 0; p < row.size(); ++p) {
    if (row[p] < 0) throw DataError("graph '" + id + "': negative attribute code");
    vocab[p] = std::max(vocab[p], row[p] + 1);
  }
}

}  // namespace detail

/// Builds a dataset, checking id uniqueness and arity consistency. Vocabulary
/// sizes default to max code + 1 per position; explicit sizes are validated.
inline GraphDataset make_dataset(std::vector<AttributedGraph> graphs, std::string name = {},
                                 std::string source = {}, std::vector<AttrCode> node_vocab = {},
                                 std::vector<AttrCode> edge_vocab = {}) {
  std::unordered_set<std::string> seen;
  std::vector<AttrCode> nv, ev;
  std::size_t node_arity = 0, edge_arity = 0;
  bool first = true;
  for (const auto& g : graphs) {
    if (!seen.insert(g.id()).second) throw DataError("duplicate graph id '" + g.id() + "'");
    // Graphs without nodes/edges carry no arity information.
    if (g.node_count() > 0 || g.edge_count() > 0) {
      if (first) {
        node_arity = g.node_arity();
        edge_arity = g.edge_arity();
        first = false;
      } else if ((g.node_count() > 0 && g.node_arity() != node_arity) ||
                 (g.edge_count() > 0 && g.edge_arity() != edge_arity)) {
        throw DataError("graph '" + g.id() + "': attribute arity differs from the rest of the dataset");
      }
    }
    for (NodeIndex v = 0; v < g.node_count(); ++v) detail::grow_vocab(nv, g.node_attrs(v), g.id());
    for (std::size_t e = 0; e < g.edge_count(); ++e) detail::grow_vocab(ev, g.edge_attrs(e), g.id());
  }
  auto check = [](std::vector<AttrCode>& declared, const std::vector<AttrCode>& observed, const char* what) {
    if (declared.empty()) {
      declared = observed;
      return;
    }
    if (declared.size() < observed.size()) throw DataError(std::string(what) + " vocabulary has too few positions");
    for (std::size_t p = 0; p < observed.size(); ++p) {
      if (observed[p] > declared[p]) {
        throw DataError(std::string(what) + " attribute code at position " + std::to_string(p) +
                        " exceeds declared vocabulary size " + std::to_string(declared[p]));
      }
    }
  };
  check(node_vocab, nv, "node");
  check(edge_vocab, ev, "edge");
  return GraphDataset{std::move(graphs), std::move(node_vocab), std::move(edge_vocab), std::move(name),
                      std::move(source)};
}

inline std::vector<HopDistance> bfs_distances(const AttributedGraph& g, NodeIndex source) {
  std::vector<HopDistance> dist(g.node_count(), kUnreachable);
  std::queue<NodeIndex> frontier;
  dist[source] = 0;
  frontier.push(source);
  while (!frontier.empty()) {
    NodeIndex v = frontier.front();
    frontier.pop();
    for (const auto& nb : g.neighbors(v)) {
      if (dist[nb.node] == kUnreachable) {
        dist[nb.node] = dist[v] + 1;
        frontier.push(nb.node);
      }
    }
  }
  return dist;
}

/// Unweighted hop distances from each source; row k holds distances from sources[k].
class DistanceTable {
 public:
  DistanceTable(std::vector<NodeIndex> sources, std::vector<std::vector<HopDistance>> rows)
      : sources_(std::move(sources)), rows_(std::move(rows)) {}

  std::span<const NodeIndex> sources() const noexcept { return sources_; }
  std::span<const HopDistance> from(std::size_t k) const { return rows_.at(k); }

  HopDistance at(NodeIndex source, NodeIndex node) const {
    for (std::size_t k = 0; k < sources_.size(); ++k) {
      if (sources_[k] == source) return rows_[k].at(node);
    }
    throw PreconditionError("node " + std::to_string(source) + " is not a source of this table");
  }

 private:
  std::vector<NodeIndex> sources_;
  std::vector<std::vector<HopDistance>> rows_;
};

inline DistanceTable shortest_path_lengths(const AttributedGraph& g, std::span<const NodeIndex> sources) {
  std::vector<std::vector<HopDistance>> rows;
  rows.reserve(sources.size());
  for (NodeIndex s : sources) {
    if (s >= g.node_count()) throw PreconditionError("source node out of range");
    rows.push_back(bfs_distances(g, s));
  }
  return DistanceTable({sources.begin(), sources.end()}, std::move(rows));
}

struct Components {
  std::vector<std::uint32_t> label;  // per node
  std::size_t count = 0;
};

inline Components connected_components(const AttributedGraph& g) {
  Components c;
  c.label.assign(g.node_count(), std::numeric_limits<std::uint32_t>::max());
  std::vector<NodeIndex> stack;
  for (NodeIndex s = 0; s < g.node_count(); ++s) {
    if (c.label[s] != std::numeric_limits<std::uint32_t>::max()) continue;
    auto id = static_cast<std::uint32_t>(c.count++);
    c.label[s] = id;
    stack.push_back(s);
    while (!stack.empty()) {
      NodeIndex v = stack.back();
      stack.pop_back();
      for (const auto& nb : g.neighbors(v)) {
        if (c.label[nb.node] != id) {
          c.label[nb.node] = id;
          stack.push_back(nb.node);
        }
      }
    }
  }
  return c;
}

inline bool is_connected(const AttributedGraph& g) { return connected_components(g).count <= 1; }

// m - n + c; equals the ring count (SSSR size) for the simple molecular graphs handled here.
inline std::size_t cyclomatic_number(const AttributedGraph& g) {
  return g.edge_count() + connected_components(g).count - g.node_count();
}

/// Subgraph induced by `nodes` (kept in the given order; indices compacted).
inline AttributedGraph induced_subgraph(const AttributedGraph& g, std::span<const NodeIndex> nodes,
                                        std::string id) {
  std::vector<std::int64_t> remap(g.node_count(), -1);
  for (std::size_t k = 0; k < nodes.size(); ++k) remap[nodes[k]] = static_cast<std::int64_t>(k);
  std::vector<std::vector<AttrCode>> node_attrs;
  if (g.node_arity() > 0) {
    for (NodeIndex v : nodes) {
      auto a = g.node_attrs(v);
      node_attrs.emplace_back(a.begin(), a.end());
    }
  }
  std::vector<Edge> edges;
  std::vector<std::vector<AttrCode>> edge_attrs;
  for (std::size_t e = 0; e < g.edge_count(); ++e) {
    const Edge& ed = g.edges()[e];
    if (remap[ed.u] < 0 || remap[ed.v] < 0) continue;
    edges.push_back({static_cast<NodeIndex>(remap[ed.u]), static_cast<NodeIndex>(remap[ed.v])});
    if (g.edge_arity() > 0) {
      auto a = g.edge_attrs(e);
      edge_attrs.emplace_back(a.begin(), a.end());
    }
  }
  return AttributedGraph(std::move(id), nodes.size(), std::move(edges), std::move(node_attrs),
                         std::move(edge_attrs));
}

}  // namespace hiersample
