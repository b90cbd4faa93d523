#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <queue>
#include <span>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "json.hpp"

#include "hiersample/errors.hpp"
#include "hiersample/graph.hpp"
#include "hiersample/masses.hpp"
#include "hiersample/parallel.hpp"
#include "hiersample/similarity.hpp"

namespace hiersample {

struct CandidatePolicy {
  enum class Mode { Molecular, Structural };

  Mode mode = Mode::Molecular;
  double weight_tol = 0.10;    // fraction of the selecting graph's weight
  std::size_t ring_tol = 1;
  std::size_t atom_tol = 7;
  double node_tol = 0.10;      // fraction of the selecting graph's node count
  double edge_tol = 0.10;      // fraction of the selecting graph's edge count
  std::size_t max_candidates = 70;

  void validate() const {
    if (weight_tol < 0 || node_tol < 0 || edge_tol < 0) throw PreconditionError("candidate tolerances must be nonnegative");
    if (max_candidates < 1) throw PreconditionError("max_candidates must be at least 1");
  }
};

using CandidateLists = std::vector<std::vector<std::uint32_t>>;

namespace detail {

inline std::size_t abs_diff(std::size_t a, std::size_t b) { return a > b ? a - b : b - a; }

}  // namespace detail

/// Candidate partners per graph. Graphs are ordered by sort key (weight or node
/// count, ties by id); each graph's candidates are the graphs passing every
/// tolerance filter, listed in that order and cut at max_candidates.
inline CandidateLists select_candidates(const GraphDataset& ds, const CandidatePolicy& policy,
                                        const MassTable* masses = nullptr, const ParallelFor& parallel = run_serial) {
  policy.validate();
  const std::size_t n = ds.size();
  const bool molecular = policy.mode == CandidatePolicy::Mode::Molecular;
  if (molecular && masses == nullptr) throw PreconditionError("molecular candidate selection needs a mass table");

  std::vector<double> key(n);
  std::vector<std::size_t> rings(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& g = ds[i];
    key[i] = molecular ? graph_weight(g, *masses) : static_cast<double>(g.node_count());
    rings[i] = molecular ? cyclomatic_number(g) : 0;
  }
  std::vector<std::uint32_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = static_cast<std::uint32_t>(i);
  std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
    if (key[a] != key[b]) return key[a] < key[b];
    return ds[a].id() < ds[b].id();
  });
  std::vector<double> sorted_keys(n);
  for (std::size_t k = 0; k < n; ++k) sorted_keys[k] = key[order[k]];

  CandidateLists out(n);
  parallel(n, [&](std::size_t i) {
    const auto& gi = ds[i];
    const double tol = molecular ? policy.weight_tol : policy.node_tol;
    const double lo = key[i] - tol * key[i];
    const double hi = key[i] + tol * key[i];
    auto start = std::lower_bound(sorted_keys.begin(), sorted_keys.end(), lo);
    for (auto k = static_cast<std::size_t>(start - sorted_keys.begin()); k < n; ++k) {
      if (sorted_keys[k] > hi) break;
      const std::uint32_t j = order[k];
      if (j == i) continue;
      const auto& gj = ds[j];
      if (std::abs(key[j] - key[i]) > tol * key[i]) continue;
      if (molecular) {
        if (detail::abs_diff(rings[i], rings[j]) > policy.ring_tol) continue;
        if (detail::abs_diff(gi.node_count(), gj.node_count()) > policy.atom_tol) continue;
      } else {
        const double de = std::abs(static_cast<double>(gi.edge_count()) - static_cast<double>(gj.edge_count()));
        if (de > policy.edge_tol * static_cast<double>(gi.edge_count())) continue;
      }
      out[i].push_back(j);
      if (out[i].size() >= policy.max_candidates) break;
    }
  });
  return out;
}

/// Graph over graphs: an edge joins two dataset graphs whose similarity is at least tau.
class SimilarityHierarchy {
 public:
  struct Link {
    std::uint32_t node;
    double weight;
  };
  struct WeightedEdge {
    std::uint32_t i;
    std::uint32_t j;
    double weight;
  };

  SimilarityHierarchy() = default;

  SimilarityHierarchy(std::vector<std::string> ids, std::span<const WeightedEdge> edges, double tau,
                      std::string measure)
      : ids_(std::move(ids)), adjacency_(ids_.size()), tau_(tau), measure_(std::move(measure)) {
    if (!(tau_ > 0.0 && tau_ < 1.0)) throw PreconditionError("hierarchy threshold must lie in (0, 1)");
    for (const auto& e : edges) {
      if (e.i >= ids_.size() || e.j >= ids_.size()) throw DataError("hierarchy edge index out of range");
      if (e.i == e.j) throw DataError("hierarchy self-edge on '" + ids_[e.i] + "'");
      if (e.weight < tau_) throw DataError("hierarchy edge weight below threshold");
      adjacency_[e.i].push_back({e.j, e.weight});
      adjacency_[e.j].push_back({e.i, e.weight});
    }
    for (auto& links : adjacency_) {
      std::sort(links.begin(), links.end(), [](const Link& a, const Link& b) { return a.node < b.node; });
      for (std::size_t k = 1; k < links.size(); ++k) {
        if (links[k].node == links[k - 1].node) throw DataError("duplicate hierarchy edge");
      }
    }
    for (std::size_t i = 0; i < ids_.size(); ++i) {
      if (!index_.emplace(ids_[i], static_cast<std::uint32_t>(i)).second) {
        throw DataError("duplicate hierarchy id '" + ids_[i] + "'");
      }
    }
  }

  std::size_t size() const noexcept { return ids_.size(); }
  double tau() const noexcept { return tau_; }
  const std::string& measure() const noexcept { return measure_; }
  std::span<const std::string> ids() const noexcept { return ids_; }
  const std::string& id(std::size_t i) const { return ids_.at(i); }
  std::span<const Link> neighbors(std::size_t i) const { return adjacency_.at(i); }
  std::size_t degree(std::size_t i) const { return adjacency_.at(i).size(); }

  std::size_t edge_count() const noexcept {
    std::size_t twice = 0;
    for (const auto& links : adjacency_) twice += links.size();
    return twice / 2;
  }

  std::optional<std::uint32_t> find(const std::string& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }
  std::uint32_t index_of(const std::string& id) const {
    auto found = find(id);
    if (!found) throw DataError("id '" + id + "' is not in the hierarchy");
    return *found;
  }

  std::optional<double> weight(std::size_t i, std::size_t j) const {
    const auto& links = adjacency_.at(i);
    auto it = std::lower_bound(links.begin(), links.end(), j,
                               [](const Link& l, std::size_t target) { return l.node < target; });
    if (it == links.end() || it->node != j) return std::nullopt;
    return it->weight;
  }
  bool connected(std::size_t i, std::size_t j) const { return weight(i, j).has_value(); }

  std::vector<WeightedEdge> edges() const {
    std::vector<WeightedEdge> out;
    for (std::uint32_t i = 0; i < adjacency_.size(); ++i) {
      for (const auto& l : adjacency_[i]) {
        if (i < l.node) out.push_back({i, l.node, l.weight});
      }
    }
    return out;
  }

  std::vector<HopDistance> hop_distances(std::size_t source) const {
    std::vector<HopDistance> dist(size(), kUnreachable);
    std::queue<std::uint32_t> frontier;
    dist.at(source) = 0;
    frontier.push(static_cast<std::uint32_t>(source));
    while (!frontier.empty()) {
      auto v = frontier.front();
      frontier.pop();
      for (const auto& l : adjacency_[v]) {
        if (dist[l.node] == kUnreachable) {
          dist[l.node] = dist[v] + 1;
          frontier.push(l.node);
        }
      }
    }
    return dist;
  }

 private:
  std::vector<std::string> ids_;
  std::vector<std::vector<Link>> adjacency_;
  std::unordered_map<std::string, std::uint32_t> index_;
  double tau_ = 0.5;
  std::string measure_;
};

struct HierarchyBuild {
  SimilarityHierarchy hierarchy;
  std::vector<ScoredPair> evaluated;  // every scored unordered pair, i < j, sorted
};

/// Scores each unordered candidate pair once (union of both directions) and
/// keeps pairs with similarity >= tau.
inline HierarchyBuild build_hierarchy_scored(const GraphDataset& ds, const PairScorer& scorer, double tau,
                                             const CandidateLists& candidates, std::string measure_digest,
                                             const ParallelFor& parallel = run_serial) {
  if (!(tau > 0.0 && tau < 1.0)) throw PreconditionError("tau must lie in (0, 1)");
  if (candidates.size() != ds.size()) throw PreconditionError("candidate lists do not match the dataset");
  std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;
  for (std::uint32_t i = 0; i < candidates.size(); ++i) {
    for (auto j : candidates[i]) {
      if (j == i) continue;
      pairs.emplace_back(std::min(i, j), std::max(i, j));
    }
  }
  std::sort(pairs.begin(), pairs.end());
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());

  std::vector<double> sims(pairs.size());
  parallel(pairs.size(), [&](std::size_t k) { sims[k] = scorer(pairs[k].first, pairs[k].second); });

  HierarchyBuild out;
  std::vector<SimilarityHierarchy::WeightedEdge> edges;
  out.evaluated.reserve(pairs.size());
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    out.evaluated.push_back({pairs[k].first, pairs[k].second, sims[k]});
    if (sims[k] >= tau) edges.push_back({pairs[k].first, pairs[k].second, sims[k]});
  }
  std::vector<std::string> ids;
  ids.reserve(ds.size());
  for (const auto& g : ds.graphs) ids.push_back(g.id());
  out.hierarchy = SimilarityHierarchy(std::move(ids), edges, tau, std::move(measure_digest));
  return out;
}

inline SimilarityHierarchy build_hierarchy(const GraphDataset& ds, const SimilarityMeasure& measure, double tau,
                                           const CandidateLists& candidates,
                                           const ParallelFor& parallel = run_serial) {
  auto scorer = measure.index(ds.graphs, parallel);
  return build_hierarchy_scored(ds, *scorer, tau, candidates, measure.digest(), parallel).hierarchy;
}

/// Mean similarity between each target and the hierarchy members at exactly d
/// hops, averaged over targets that have such members; entry d-1 is hop d.
inline std::vector<std::optional<double>> hop_similarity_profile(const SimilarityHierarchy& h,
                                                                 const PairScorer& scorer,
                                                                 std::span<const std::uint32_t> targets,
                                                                 std::size_t max_hop,
                                                                 const ParallelFor& parallel = run_serial) {
  std::vector<std::vector<std::optional<double>>> per_target(targets.size());
  parallel(targets.size(), [&](std::size_t t) {
    const auto target = targets[t];
    if (target >= h.size()) throw PreconditionError("profile target not in hierarchy");
    auto dist = h.hop_distances(target);
    std::vector<double> sum(max_hop + 1, 0.0);
    std::vector<std::size_t> count(max_hop + 1, 0);
    for (std::size_t x = 0; x < h.size(); ++x) {
      if (dist[x] == 0 || dist[x] == kUnreachable || dist[x] > max_hop) continue;
      sum[dist[x]] += scorer(target, x);
      ++count[dist[x]];
    }
    auto& row = per_target[t];
    row.resize(max_hop);
    for (std::size_t d = 1; d <= max_hop; ++d) {
      if (count[d] > 0) row[d - 1] = sum[d] / static_cast<double>(count[d]);
    }
  });
  std::vector<std::optional<double>> profile(max_hop);
  for (std::size_t d = 0; d < max_hop; ++d) {
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& row : per_target) {
      if (row[d]) {
        sum += *row[d];
        ++count;
      }
    }
    if (count > 0) profile[d] = sum / static_cast<double>(count);
  }
  return profile;
}

// ---------------------------------------------------------------------------
// Hierarchy file: header `{"tau", "measure", "n"}` then one `{"id", "nbrs", "w"}` line per graph.

inline std::string serialize_hierarchy(const SimilarityHierarchy& h) {
  std::string out;
  nlohmann::ordered_json header;
  header["tau"] = h.tau();
  header["measure"] = h.measure();
  header["n"] = h.size();
  out += header.dump();
  out += '\n';
  for (std::size_t i = 0; i < h.size(); ++i) {
    nlohmann::ordered_json rec;
    rec["id"] = h.id(i);
    auto nbrs = nlohmann::ordered_json::array();
    auto w = nlohmann::ordered_json::array();
    for (const auto& l : h.neighbors(i)) {
      nbrs.push_back(h.id(l.node));
      w.push_back(l.weight);
    }
    rec["nbrs"] = std::move(nbrs);
    rec["w"] = std::move(w);
    out += rec.dump();
    out += '\n';
  }
  return out;
}

inline SimilarityHierarchy parse_hierarchy(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  auto next_record = [&]() -> std::optional<nlohmann::json> {
    while (std::getline(in, line)) {
      ++line_no;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      try {
        return nlohmann::json::parse(line);
      } catch (const nlohmann::json::exception& e) {
        throw ParseError(line_no, std::string("malformed JSON: ") + e.what());
      }
    }
    return std::nullopt;
  };
  auto header = next_record();
  if (!header) throw DataError("hierarchy file is empty");
  double tau;
  std::string measure;
  std::size_t n;
  try {
    tau = header->at("tau").get<double>();
    measure = header->at("measure").get<std::string>();
    n = header->at("n").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(line_no, std::string("bad hierarchy header: ") + e.what());
  }
  std::vector<std::string> ids;
  std::vector<std::pair<std::vector<std::string>, std::vector<double>>> rows;
  std::vector<std::size_t> row_lines;
  while (auto rec = next_record()) {
    try {
      ids.push_back(rec->at("id").get<std::string>());
      rows.emplace_back(rec->at("nbrs").get<std::vector<std::string>>(), rec->at("w").get<std::vector<double>>());
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(line_no, std::string("bad hierarchy record: ") + e.what());
    }
    if (rows.back().first.size() != rows.back().second.size()) throw ParseError(line_no, "nbrs and w lengths differ");
    row_lines.push_back(line_no);
  }
  if (ids.size() != n) throw DataError("hierarchy header declares " + std::to_string(n) + " graphs, found " +
                                       std::to_string(ids.size()));
  std::unordered_map<std::string, std::uint32_t> index;
  for (std::uint32_t i = 0; i < ids.size(); ++i) index.emplace(ids[i], i);
  std::vector<SimilarityHierarchy::WeightedEdge> edges;
  for (std::uint32_t i = 0; i < rows.size(); ++i) {
    for (std::size_t k = 0; k < rows[i].first.size(); ++k) {
      auto it = index.find(rows[i].first[k]);
      if (it == index.end()) throw ParseError(row_lines[i], "unknown neighbor id '" + rows[i].first[k] + "'");
      const std::uint32_t j = it->second;
      if (i < j) {
        edges.push_back({i, j, rows[i].second[k]});
      } else if (j < i) {
        // Mirror entry; must agree with the forward entry.
        const auto& back = rows[j];
        auto pos = std::find(back.first.begin(), back.first.end(), ids[i]);
        if (pos == back.first.end() || back.second[static_cast<std::size_t>(pos - back.first.begin())] != rows[i].second[k]) {
          throw ParseError(row_lines[i], "hierarchy adjacency is not symmetric");
        }
      } else {
        throw ParseError(row_lines[i], "self-edge");
      }
    }
  }
  for (const auto& e : edges) {
    const auto& back = rows[e.j];
    if (std::find(back.first.begin(), back.first.end(), ids[e.i]) == back.first.end()) {
      throw ParseError(row_lines[e.j], "hierarchy adjacency is not symmetric");
    }
  }
  return SimilarityHierarchy(std::move(ids), edges, tau, std::move(measure));
}

}  // namespace hiersample
