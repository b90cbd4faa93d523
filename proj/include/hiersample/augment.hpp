#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hiersample/errors.hpp"
#include "hiersample/graph.hpp"
#include "hiersample/parallel.hpp"
#include "hiersample/random.hpp"
#include "hiersample/similarity.hpp"

namespace hiersample {

enum class AugmentKind { DropNode, DropEdge, MaskAttr, RwrSubgraph };

inline AugmentKind parse_augment_kind(std::string_view s) {
  if (s == "drop-node") return AugmentKind::DropNode;
  if (s == "drop-edge") return AugmentKind::DropEdge;
  if (s == "mask-attr") return AugmentKind::MaskAttr;
  if (s == "rwr-subgraph") return AugmentKind::RwrSubgraph;
  throw PreconditionError("unknown augmentation kind '" + std::string(s) + "'");
}

inline std::string_view to_string(AugmentKind k) {
  switch (k) {
    case AugmentKind::DropNode: return "drop-node";
    case AugmentKind::DropEdge: return "drop-edge";
    case AugmentKind::MaskAttr: return "mask-attr";
    case AugmentKind::RwrSubgraph: return "rwr-subgraph";
  }
  return "?";
}

inline constexpr double kRwrRestartProbability = 0.8;
// A walk that has not collected enough nodes after this many steps per node stops early.
inline constexpr std::size_t kRwrStepBudgetPerNode = 20000;

inline std::size_t ceil_count(double ratio, std::size_t n) {
  // Guard against 0.1 * 30 = 3.0000000000000004 rounding up to 4.
  const double x = ratio * static_cast<double>(n);
  const double r = std::round(x);
  if (std::abs(x - r) < 1e-9) return static_cast<std::size_t>(r);
  return static_cast<std::size_t>(std::ceil(x));
}

/// Node set reached by a random walk with restart from `seed` once `target`
/// distinct nodes are visited (or the seed's component is exhausted, or the
/// step budget runs out). Nodes are returned in visit order.
inline std::vector<NodeIndex> rwr_visit(const AttributedGraph& g, NodeIndex seed, std::size_t target, Rng& rng,
                                        double restart = kRwrRestartProbability) {
  std::size_t reachable = 0;
  for (auto d : bfs_distances(g, seed)) reachable += d != kUnreachable ? 1 : 0;
  target = std::min(target, reachable);
  std::vector<NodeIndex> order{seed};
  std::vector<bool> seen(g.node_count(), false);
  seen[seed] = true;
  const std::size_t budget = kRwrStepBudgetPerNode * std::max<std::size_t>(1, g.node_count());
  NodeIndex at = seed;
  for (std::size_t step = 0; order.size() < target && step < budget; ++step) {
    if (rng.uniform() < restart) {
      at = seed;
      continue;
    }
    auto nbrs = g.neighbors(at);
    at = nbrs[rng.below(nbrs.size())].node;
    if (!seen[at]) {
      seen[at] = true;
      order.push_back(at);
    }
  }
  return order;
}

/// One augmented view of `g`. `node_vocab` supplies the MASK code (vocabulary
/// size per attribute position) for mask-attr. Ratio 0 returns `g` unchanged
/// apart from the id suffix.
inline AttributedGraph augment(const AttributedGraph& g, AugmentKind kind, double ratio, Rng& rng,
                               std::span<const AttrCode> node_vocab = {}) {
  if (!(ratio >= 0.0 && ratio <= 1.0)) throw PreconditionError("augmentation ratio must lie in [0, 1]");
  std::string id = g.id() + "~" + std::string(to_string(kind));
  if (ratio == 0.0) return g.with_id(std::move(id));
  const std::size_t n = g.node_count();

  switch (kind) {
    case AugmentKind::DropNode: {
      const std::size_t k = ceil_count(ratio, n);
      if (k >= n) throw PreconditionError("drop-node ratio removes all nodes of '" + g.id() + "'");
      // Partial Fisher-Yates: for a fixed stream the dropped sets are nested in k.
      auto dropped = sample_without_replacement(n, k, rng);
      std::vector<bool> gone(n, false);
      for (auto v : dropped) gone[v] = true;
      std::vector<NodeIndex> kept;
      for (NodeIndex v = 0; v < n; ++v) {
        if (!gone[v]) kept.push_back(v);
      }
      return induced_subgraph(g, kept, std::move(id));
    }
    case AugmentKind::DropEdge: {
      const std::size_t m = g.edge_count();
      const std::size_t k = std::min(m, ceil_count(ratio, m));
      auto dropped = sample_without_replacement(m, k, rng);
      std::vector<bool> gone(m, false);
      for (auto e : dropped) gone[e] = true;
      std::vector<Edge> edges;
      std::vector<std::vector<AttrCode>> edge_attrs;
      for (std::size_t e = 0; e < m; ++e) {
        if (gone[e]) continue;
        edges.push_back(g.edges()[e]);
        if (g.edge_arity() > 0) {
          auto a = g.edge_attrs(e);
          edge_attrs.emplace_back(a.begin(), a.end());
        }
      }
      return AttributedGraph(std::move(id), n, std::move(edges), g.node_attr_rows(), std::move(edge_attrs));
    }
    case AugmentKind::MaskAttr: {
      if (!g.attributed()) throw PreconditionError("mask-attr needs node attributes");
      if (node_vocab.size() < g.node_arity()) throw PreconditionError("mask-attr needs the node vocabulary sizes");
      const std::size_t k = std::min(n, ceil_count(ratio, n));
      auto rows = g.node_attr_rows();
      for (auto v : sample_without_replacement(n, k, rng)) {
        for (std::size_t p = 0; p < rows[v].size(); ++p) rows[v][p] = node_vocab[p];
      }
      std::vector<Edge> edges(g.edges().begin(), g.edges().end());
      return AttributedGraph(std::move(id), n, std::move(edges), std::move(rows), g.edge_attr_rows());
    }
    case AugmentKind::RwrSubgraph: {
      if (n == 0) throw PreconditionError("rwr-subgraph on an empty graph");
      const std::size_t target = std::max<std::size_t>(1, ceil_count(ratio, n));
      auto seed = static_cast<NodeIndex>(rng.below(n));
      auto nodes = rwr_visit(g, seed, target, rng);
      std::sort(nodes.begin(), nodes.end());
      return induced_subgraph(g, nodes, std::move(id));
    }
  }
  throw PreconditionError("unhandled augmentation kind");
}

// ---------------------------------------------------------------------------
// Valence-based legality (approximation of chemical sanitization)

class ValenceTable {
 public:
  ValenceTable() = default;
  explicit ValenceTable(std::map<AttrCode, int> max_valence) : max_valence_(std::move(max_valence)) {
    for (const auto& [code, v] : max_valence_) {
      if (v <= 0) throw DataError("valence for code " + std::to_string(code) + " must be positive");
    }
  }
  std::optional<int> find(AttrCode code) const {
    auto it = max_valence_.find(code);
    if (it == max_valence_.end()) return std::nullopt;
    return it->second;
  }

 private:
  std::map<AttrCode, int> max_valence_;
};

// Codes are atomic number - 1, matching the default mass table.
inline ValenceTable default_valence_table() {
  return ValenceTable({{0, 1},  {4, 3},  {5, 4},  {6, 3},  {7, 2},  {8, 1},
                       {13, 4}, {14, 5}, {15, 6}, {16, 1}, {34, 1}, {52, 1}});
}

struct LegalityResult {
  bool legal = true;
  std::optional<NodeIndex> node;  // first offending node, when the violation is node-local
  std::string reason;
};

/// Legal iff nonempty, every node's bond-order sum is within its maximum
/// valence (unknown atom types, e.g. MASK codes, are illegal) and connected.
/// Bond order is edge attribute 0, or 1 when edges carry no attributes.
inline LegalityResult legality_check(const AttributedGraph& g, const ValenceTable& valences) {
  if (g.node_count() > 0 && !g.attributed()) throw PreconditionError("legality_check needs node attributes");
  if (g.node_count() == 0) return {false, std::nullopt, "empty graph"};
  for (NodeIndex v = 0; v < g.node_count(); ++v) {
    auto cap = valences.find(g.primary_type(v));
    if (!cap) return {false, v, "unknown atom type " + std::to_string(g.primary_type(v))};
    int used = 0;
    for (const auto& nb : g.neighbors(v)) {
      int order = g.edge_arity() > 0 ? g.edge_attrs(nb.edge)[0] : 1;
      if (order < 1 || order > 3) return {false, v, "invalid bond order " + std::to_string(order)};
      used += order;
    }
    if (used > *cap) {
      return {false, v, "valence " + std::to_string(used) + " exceeds " + std::to_string(*cap) + " at node " +
                            std::to_string(v)};
    }
  }
  if (!is_connected(g)) return {false, std::nullopt, "disconnected"};
  return {};
}

// ---------------------------------------------------------------------------
// Similarity / legality sweep over augmentation ratios

struct SweepReport {
  AugmentKind kind = AugmentKind::DropNode;
  std::vector<double> ratios;
  std::vector<double> mean_sim;
  std::optional<std::vector<double>> legal_fraction;  // molecular datasets only
  std::vector<std::uint64_t> seeds;
};

/// For every ratio, the mean over sampled graphs and seeds of sim(original,
/// augmented) and of legality. Each (seed, graph) pair uses one substream for
/// all ratios, so the ratios are compared on common random numbers.
inline SweepReport similarity_sweep(const GraphDataset& ds, const SimilarityMeasure& sim, AugmentKind kind,
                                    std::span<const double> ratios, std::span<const std::uint64_t> seeds,
                                    std::size_t sample_size, const ValenceTable* valences = nullptr,
                                    const ParallelFor& parallel = run_serial) {
  if (!std::is_sorted(ratios.begin(), ratios.end())) throw PreconditionError("sweep ratios must be ascending");
  if (seeds.empty()) throw PreconditionError("sweep needs at least one seed");
  const std::size_t take = std::min(sample_size, ds.size());
  struct Job {
    std::uint64_t seed;
    std::uint32_t graph;
  };
  std::vector<Job> jobs;
  for (auto seed : seeds) {
    auto pick = Rng::substream(seed, {0x5eedULL});
    auto chosen = sample_without_replacement(ds.size(), take, pick);
    std::sort(chosen.begin(), chosen.end());
    for (auto g : chosen) jobs.push_back({seed, g});
  }
  std::vector<std::vector<double>> sims(jobs.size()), legal(jobs.size());
  parallel(jobs.size(), [&](std::size_t k) {
    const auto& g = ds[jobs[k].graph];
    sims[k].resize(ratios.size());
    legal[k].resize(ratios.size());
    for (std::size_t r = 0; r < ratios.size(); ++r) {
      auto rng = Rng::substream(jobs[k].seed, {0xa06ULL, jobs[k].graph});
      auto view = augment(g, kind, ratios[r], rng, ds.node_vocab);
      sims[k][r] = sim.similarity(g, view);
      if (valences) legal[k][r] = legality_check(view, *valences).legal ? 1.0 : 0.0;
    }
  });
  SweepReport rep;
  rep.kind = kind;
  rep.ratios.assign(ratios.begin(), ratios.end());
  rep.seeds.assign(seeds.begin(), seeds.end());
  rep.mean_sim.assign(ratios.size(), 0.0);
  if (valences) rep.legal_fraction = std::vector<double>(ratios.size(), 0.0);
  for (std::size_t r = 0; r < ratios.size(); ++r) {
    double s = 0.0, l = 0.0;
    for (std::size_t k = 0; k < jobs.size(); ++k) {
      s += sims[k][r];
      l += legal[k][r];
    }
    const double denom = jobs.empty() ? 1.0 : static_cast<double>(jobs.size());
    rep.mean_sim[r] = s / denom;
    if (valences) (*rep.legal_fraction)[r] = l / denom;
  }
  return rep;
}

inline std::string sweep_csv(const SweepReport& rep) {
  std::string out = "kind,ratio,mean_sim,legal_frac,seed_count\n";
  char buf[160];
  for (std::size_t r = 0; r < rep.ratios.size(); ++r) {
    std::string legal;
    if (rep.legal_fraction) {
      std::snprintf(buf, sizeof buf, "%.17g", (*rep.legal_fraction)[r]);
      legal = buf;
    }
    std::snprintf(buf, sizeof buf, "%s,%.17g,%.17g,%s,%zu\n", std::string(to_string(rep.kind)).c_str(),
                  rep.ratios[r], rep.mean_sim[r], legal.c_str(), rep.seeds.size());
    out += buf;
  }
  return out;
}

inline std::string sweep_table(const SweepReport& rep) {
  std::string out;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-14s %8s %10s %10s %6s\n", "kind", "ratio", "mean_sim", "legal", "seeds");
  out += buf;
  for (std::size_t r = 0; r < rep.ratios.size(); ++r) {
    std::string legal = "-";
    if (rep.legal_fraction) {
      std::snprintf(buf, sizeof buf, "%.4f", (*rep.legal_fraction)[r]);
      legal = buf;
    }
    std::snprintf(buf, sizeof buf, "%-14s %8.3f %10.4f %10s %6zu\n", std::string(to_string(rep.kind)).c_str(),
                  rep.ratios[r], rep.mean_sim[r], legal.c_str(), rep.seeds.size());
    out += buf;
  }
  return out;
}

}  // namespace hiersample
