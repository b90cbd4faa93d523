#pragma once

#include <algorithm>
#include <cstdint>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "hiersample/errors.hpp"
#include "hiersample/graph.hpp"
#include "hiersample/hierarchy.hpp"
#include "hiersample/parallel.hpp"
#include "hiersample/random.hpp"
#include "hiersample/sampler.hpp"
#include "hiersample/similarity.hpp"

namespace hiersample {

struct OracleExperimentConfig {
  std::size_t classes = 4;
  std::size_t per_class = 50;
  double noise = 0.1;               // fraction of edges rewired per instance
  std::vector<double> taus = {0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  std::uint64_t seed = 0;
  std::size_t base_nodes = 16;
  std::size_t base_edges = 24;
  std::size_t wl_iterations = 3;
  std::size_t pos_count = 3;
  std::size_t draws_per_target = 10;  // independent first-order samples per target

  void validate() const {
    if (classes < 2) throw PreconditionError("oracle experiment needs at least 2 classes");
    if (per_class < 1) throw PreconditionError("oracle experiment needs at least 1 graph per class");
    if (!(noise >= 0.0 && noise <= 1.0)) throw PreconditionError("noise must lie in [0, 1]");
    if (base_nodes < 2) throw PreconditionError("base graphs need at least 2 nodes");
    if (base_edges > base_nodes * (base_nodes - 1) / 2) throw PreconditionError("too many base edges");
    if (pos_count < 1 || draws_per_target < 1) throw PreconditionError("pos_count and draws must be positive");
    for (double t : taus) {
      if (!(t > 0.0 && t < 1.0)) throw PreconditionError("tau grid values must lie in (0, 1)");
    }
  }
};

struct OraclePoint {
  double tau;
  double false_positive_rate;      // sampled positives from another class / all sampled positives
  double expected_false_positive;  // mean first-draw probability of a cross-class positive
  double coverage;                 // same-class pairs joined by a hierarchy edge
  std::size_t sampled;             // positives drawn in total
  std::size_t isolated;            // targets without neighbors
};

struct LabeledDataset {
  GraphDataset dataset;
  std::vector<std::uint32_t> labels;
};

namespace detail {

inline std::vector<Edge> random_gnm(std::size_t n, std::size_t m, Rng& rng) {
  std::vector<Edge> all;
  for (NodeIndex u = 0; u < n; ++u) {
    for (NodeIndex v = u + 1; v < n; ++v) all.push_back({u, v});
  }
  auto pick = sample_without_replacement(all.size(), m, rng);
  std::vector<Edge> out;
  for (auto k : pick) out.push_back(all[k]);
  std::sort(out.begin(), out.end());
  return out;
}

// Replaces `count` uniformly chosen edges with uniformly chosen non-edges.
inline std::vector<Edge> rewire(std::size_t n, std::vector<Edge> edges, std::size_t count, Rng& rng) {
  std::set<Edge> present(edges.begin(), edges.end());
  auto drop = sample_without_replacement(edges.size(), count, rng);
  std::vector<bool> dropped(edges.size(), false);
  for (auto k : drop) dropped[k] = true;
  std::vector<Edge> kept;
  for (std::size_t k = 0; k < edges.size(); ++k) {
    if (!dropped[k]) kept.push_back(edges[k]);
  }
  std::vector<Edge> absent;
  for (NodeIndex u = 0; u < n; ++u) {
    for (NodeIndex v = u + 1; v < n; ++v) {
      if (!present.count({u, v})) absent.push_back({u, v});
    }
  }
  auto add = sample_without_replacement(absent.size(), std::min(count, absent.size()), rng);
  for (auto k : add) kept.push_back(absent[k]);
  std::sort(kept.begin(), kept.end());
  return kept;
}

class MatrixScorer final : public PairScorer {
 public:
  MatrixScorer(const PairScorer& base, std::size_t n, const ParallelFor& parallel) : n_(n), sims_(n * n, 1.0) {
    parallel(n, [&](std::size_t i) {
      for (std::size_t j = i + 1; j < n; ++j) sims_[i * n + j] = base(i, j);
    });
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < i; ++j) sims_[i * n + j] = sims_[j * n + i];
    }
  }
  double operator()(std::size_t i, std::size_t j) const override { return sims_[i * n_ + j]; }

 private:
  std::size_t n_;
  std::vector<double> sims_;
};

}  // namespace detail

/// One random G(n, m) base graph per class; each instance rewires
/// round(noise * m) of its class's base edges.
inline LabeledDataset make_labeled_corpus(const OracleExperimentConfig& cfg) {
  cfg.validate();
  LabeledDataset out;
  std::vector<AttributedGraph> graphs;
  const auto rewired = static_cast<std::size_t>(std::lround(cfg.noise * static_cast<double>(cfg.base_edges)));
  for (std::size_t c = 0; c < cfg.classes; ++c) {
    auto base_rng = Rng::substream(cfg.seed, {0xba5eULL, c});
    auto base = detail::random_gnm(cfg.base_nodes, cfg.base_edges, base_rng);
    for (std::size_t k = 0; k < cfg.per_class; ++k) {
      auto rng = Rng::substream(cfg.seed, {0x1257ULL, c, k});
      auto edges = detail::rewire(cfg.base_nodes, base, rewired, rng);
      graphs.emplace_back("c" + std::to_string(c) + "_" + std::to_string(k), cfg.base_nodes, std::move(edges));
      out.labels.push_back(static_cast<std::uint32_t>(c));
    }
  }
  out.dataset = make_dataset(std::move(graphs), "oracle");
  return out;
}

/// False-positive rate and ground-truth coverage of first-order positives over
/// a WL hierarchy, one point per tau.
inline std::vector<OraclePoint> synthetic_oracle_experiment(const OracleExperimentConfig& cfg,
                                                            const ParallelFor& parallel = run_serial) {
  auto corpus = make_labeled_corpus(cfg);
  const auto& ds = corpus.dataset;
  const auto& labels = corpus.labels;
  const std::size_t n = ds.size();
  WlSimilarity wl(cfg.wl_iterations);
  auto indexed = wl.index(ds.graphs, parallel);
  detail::MatrixScorer scorer(*indexed, n, parallel);

  CandidatePolicy policy;
  policy.mode = CandidatePolicy::Mode::Structural;
  policy.max_candidates = n;
  auto candidates = select_candidates(ds, policy, nullptr, parallel);

  double same_pairs = 0.0;
  for (std::size_t c = 0; c < cfg.classes; ++c) {
    same_pairs += static_cast<double>(cfg.per_class) * static_cast<double>(cfg.per_class - 1) / 2.0;
  }

  std::vector<OraclePoint> out;
  for (std::size_t t = 0; t < cfg.taus.size(); ++t) {
    const double tau = cfg.taus[t];
    auto h = build_hierarchy_scored(ds, scorer, tau, candidates, wl.digest(), parallel).hierarchy;
    struct Tally {
      std::size_t sampled = 0, cross = 0;
      double expected = 0.0;
      bool isolated = false;
    };
    std::vector<Tally> tally(n);
    parallel(n, [&](std::size_t i) {
      auto& row = tally[i];
      if (h.degree(i) == 0) {
        row.isolated = true;
        return;
      }
      for (const auto& p : first_order_probabilities(h, i)) {
        if (labels[p.node] != labels[i]) row.expected += p.p;
      }
      for (std::size_t d = 0; d < cfg.draws_per_target; ++d) {
        auto rng = Rng::substream(cfg.seed, {0x5a3eULL, i, d});  // shared across tau
        auto s = first_order_sample(h, i, cfg.pos_count, rng);
        for (auto p : s.positives) {
          ++row.sampled;
          if (labels[p] != labels[i]) ++row.cross;
        }
      }
    });
    OraclePoint pt{tau, 0.0, 0.0, 0.0, 0, 0};
    std::size_t cross = 0, active = 0;
    double expected = 0.0;
    for (const auto& row : tally) {
      if (row.isolated) {
        ++pt.isolated;
        continue;
      }
      ++active;
      pt.sampled += row.sampled;
      cross += row.cross;
      expected += row.expected;
    }
    pt.false_positive_rate = pt.sampled ? static_cast<double>(cross) / static_cast<double>(pt.sampled) : 0.0;
    pt.expected_false_positive = active ? expected / static_cast<double>(active) : 0.0;
    double linked = 0.0;
    for (const auto& e : h.edges()) {
      if (labels[e.i] == labels[e.j]) linked += 1.0;
    }
    pt.coverage = same_pairs > 0.0 ? linked / same_pairs : 0.0;
    out.push_back(pt);
  }
  return out;
}

inline std::string oracle_csv(std::span<const OraclePoint> points) {
  std::ostringstream os;
  os.precision(17);
  os << "tau,false_positive_rate,expected_false_positive,coverage,sampled,isolated\n";
  for (const auto& p : points) {
    os << p.tau << ',' << p.false_positive_rate << ',' << p.expected_false_positive << ',' << p.coverage << ','
       << p.sampled << ',' << p.isolated << '\n';
  }
  return os.str();
}

}  // namespace hiersample
