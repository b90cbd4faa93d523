#pragma once

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "hiersample/hiersample.hpp"

namespace hiersample::testing {

inline std::filesystem::path data_dir() { return HIERSAMPLE_DATA_DIR; }

inline const GraphDataset& desk_corpus() {
  static const GraphDataset ds = load_dataset(data_dir() / "desk_molecules.jsonl", DatasetFormat::GraphJsonl);
  return ds;
}

inline AttributedGraph path_graph(std::size_t n, std::string id = "path") {
  std::vector<Edge> e;
  for (NodeIndex v = 0; v + 1 < n; ++v) e.push_back({v, v + 1});
  return {std::move(id), n, std::move(e)};
}

inline AttributedGraph cycle_graph(std::size_t n, std::string id = "cycle") {
  std::vector<Edge> e;
  for (NodeIndex v = 0; v < n; ++v) e.push_back({v, static_cast<NodeIndex>((v + 1) % n)});
  return {std::move(id), n, std::move(e)};
}

// G(n, p) with node attributes drawn from [0, codes) when codes > 0.
inline AttributedGraph random_graph(std::size_t n, double p, Rng& rng, std::string id = "g", AttrCode codes = 0) {
  std::vector<Edge> e;
  for (NodeIndex u = 0; u < n; ++u) {
    for (NodeIndex v = u + 1; v < n; ++v) {
      if (rng.uniform() < p) e.push_back({u, v});
    }
  }
  std::vector<std::vector<AttrCode>> attrs;
  if (codes > 0) {
    for (std::size_t v = 0; v < n; ++v) attrs.push_back({static_cast<AttrCode>(rng.below(codes))});
  }
  return {std::move(id), n, std::move(e), std::move(attrs)};
}

// Same graph under node relabeling v -> perm[v].
inline AttributedGraph permuted(const AttributedGraph& g, const std::vector<NodeIndex>& perm) {
  std::vector<Edge> e;
  std::vector<std::vector<AttrCode>> eattrs;
  for (std::size_t k = 0; k < g.edge_count(); ++k) {
    e.push_back({perm[g.edges()[k].u], perm[g.edges()[k].v]});
    if (g.edge_arity() > 0) eattrs.emplace_back(g.edge_attrs(k).begin(), g.edge_attrs(k).end());
  }
  std::vector<std::vector<AttrCode>> nattrs;
  if (g.attributed()) {
    nattrs.resize(g.node_count());
    for (NodeIndex v = 0; v < g.node_count(); ++v) nattrs[perm[v]].assign(g.node_attrs(v).begin(), g.node_attrs(v).end());
  }
  return {g.id(), g.node_count(), std::move(e), std::move(nattrs), std::move(eattrs)};
}

inline std::vector<NodeIndex> random_permutation(std::size_t n, Rng& rng) {
  auto p = sample_without_replacement(n, n, rng);
  return {p.begin(), p.end()};
}

// Hierarchy from an explicit weighted edge list over ids "g0".."g{n-1}".
inline SimilarityHierarchy make_hierarchy(std::size_t n, std::vector<SimilarityHierarchy::WeightedEdge> edges,
                                          double tau = 0.1) {
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < n; ++i) ids.push_back("g" + std::to_string(i));
  return SimilarityHierarchy(std::move(ids), edges, tau, "test");
}

struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& tag) {
    path = std::filesystem::temp_directory_path() / ("hiersample_" + tag + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace hiersample::testing
