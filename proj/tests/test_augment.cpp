#include <gtest/gtest.h>

#include <bit>
#include <sstream>

#include "support.hpp"

namespace hs = hiersample;

namespace {

// Node i carries attribute code i, so augmented views reveal which nodes survived.
hs::AttributedGraph labeled(std::size_t n, std::vector<hs::Edge> edges) {
  std::vector<std::vector<hs::AttrCode>> attrs;
  for (std::size_t v = 0; v < n; ++v) attrs.push_back({static_cast<hs::AttrCode>(v)});
  return {"lab", n, std::move(edges), attrs};
}

std::uint32_t node_set(const hs::AttributedGraph& view) {
  std::uint32_t mask = 0;
  for (hs::NodeIndex v = 0; v < view.node_count(); ++v) mask |= 1U << view.primary_type(v);
  return mask;
}

// Exact distribution of the RWR node set: uniform seed, then the absorbing chain
// over (visited set, position) until `target` distinct nodes are seen.
std::map<std::uint32_t, double> rwr_exact(const hs::AttributedGraph& g, std::size_t target, double restart) {
  const std::size_t n = g.node_count();
  std::map<std::uint32_t, double> absorbed;
  for (hs::NodeIndex seed = 0; seed < n; ++seed) {
    std::map<std::pair<std::uint32_t, hs::NodeIndex>, double> mass{{{1U << seed, seed}, 1.0 / double(n)}};
    if (target <= 1) {
      absorbed[1U << seed] += 1.0 / double(n);
      continue;
    }
    for (int step = 0; step < 20000 && !mass.empty(); ++step) {
      std::map<std::pair<std::uint32_t, hs::NodeIndex>, double> next;
      for (const auto& [state, p] : mass) {
        const auto [set, at] = state;
        next[{set, seed}] += p * restart;
        const auto nbrs = g.neighbors(at);
        for (const auto& nb : nbrs) {
          const double q = p * (1.0 - restart) / double(nbrs.size());
          const std::uint32_t grown = set | (1U << nb.node);
          if (static_cast<std::size_t>(std::popcount(grown)) >= target) {
            absorbed[grown] += q;
          } else {
            next[{grown, nb.node}] += q;
          }
        }
      }
      mass.clear();
      for (const auto& [k, v] : next) {
        if (v > 1e-18) mass[k] = v;
      }
    }
  }
  return absorbed;
}

void expect_rwr_matches(const hs::AttributedGraph& g, double ratio, std::uint64_t seed) {
  const std::size_t target = hs::ceil_count(ratio, g.node_count());
  auto exact = rwr_exact(g, target, hs::kRwrRestartProbability);
  std::map<std::uint32_t, double> seen;
  hs::Rng rng(seed);
  const int runs = 100000;
  for (int r = 0; r < runs; ++r) seen[node_set(hs::augment(g, hs::AugmentKind::RwrSubgraph, ratio, rng))] += 1.0 / runs;
  double total = 0.0;
  for (const auto& [set, p] : exact) {
    total += p;
    EXPECT_NEAR(seen[set], p, 0.02) << "set " << set;
  }
  EXPECT_NEAR(total, 1.0, 1e-9);
  for (const auto& [set, p] : seen) EXPECT_TRUE(exact.count(set)) << "unexpected set " << set;
}

const hs::ValenceTable& valences() {
  static const auto t = hs::default_valence_table();
  return t;
}

}  // namespace

TEST(Augment, CeilCountAvoidsRoundingUp) {
  EXPECT_EQ(hs::ceil_count(0.1, 30), 3u);
  EXPECT_EQ(hs::ceil_count(0.15, 13), 2u);
  EXPECT_EQ(hs::ceil_count(0.0, 13), 0u);
  EXPECT_EQ(hs::ceil_count(1.0 / 3.0, 3), 1u);
}

TEST(Augment, ZeroRatioIsIdentity) {
  const auto& g = hs::testing::desk_corpus()[0];
  hs::Rng rng(0);
  for (auto kind : {hs::AugmentKind::DropNode, hs::AugmentKind::DropEdge, hs::AugmentKind::MaskAttr,
                    hs::AugmentKind::RwrSubgraph}) {
    auto v = hs::augment(g, kind, 0.0, rng, hs::testing::desk_corpus().node_vocab);
    EXPECT_EQ(hs::serialize_graph(v.with_id(g.id())), hs::serialize_graph(g));
    EXPECT_NE(v.id(), g.id());
  }
}

TEST(Augment, DropNodeOnTriangle) {
  hs::Rng rng(1);
  auto v = hs::augment(hs::testing::cycle_graph(3), hs::AugmentKind::DropNode, 1.0 / 3.0, rng);
  EXPECT_EQ(v.node_count(), 2u);
  EXPECT_LE(v.edge_count(), 1u);
  EXPECT_THROW(hs::augment(hs::testing::cycle_graph(3), hs::AugmentKind::DropNode, 1.0, rng), hs::PreconditionError);
  EXPECT_THROW(hs::augment(hs::testing::cycle_graph(3), hs::AugmentKind::DropNode, 1.5, rng), hs::PreconditionError);
}

TEST(Augment, DropNodeKeepsInducedStructure) {
  auto g = labeled(6, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}, {5, 0}, {0, 3}});
  hs::Rng rng(2);
  for (int t = 0; t < 200; ++t) {
    auto v = hs::augment(g, hs::AugmentKind::DropNode, 0.3, rng);
    ASSERT_EQ(v.node_count(), 4u);
    for (const auto& e : v.edges()) {
      hs::Edge original{static_cast<hs::NodeIndex>(v.primary_type(e.u)), static_cast<hs::NodeIndex>(v.primary_type(e.v))};
      if (original.u > original.v) std::swap(original.u, original.v);
      EXPECT_NE(std::find(g.edges().begin(), g.edges().end(), original), g.edges().end());
    }
  }
}

TEST(Augment, DropEdgeRemovesExactCount) {
  hs::Rng rng(3);
  for (const auto& g : hs::testing::desk_corpus().graphs) {
    for (double r : {0.05, 0.1, 0.3, 1.0}) {
      auto v = hs::augment(g, hs::AugmentKind::DropEdge, r, rng);
      EXPECT_EQ(v.edge_count(), g.edge_count() - std::min(g.edge_count(), hs::ceil_count(r, g.edge_count())));
      EXPECT_EQ(v.node_count(), g.node_count());
      if (v.edge_count() > 0) EXPECT_EQ(v.edge_arity(), g.edge_arity());
    }
  }
}

TEST(Augment, MaskAttrUsesReservedCode) {
  const auto& ds = hs::testing::desk_corpus();
  hs::Rng rng(4);
  const auto& g = ds[5];
  auto v = hs::augment(g, hs::AugmentKind::MaskAttr, 0.2, rng, ds.node_vocab);
  std::size_t masked = 0;
  for (hs::NodeIndex x = 0; x < v.node_count(); ++x) masked += v.primary_type(x) == ds.node_vocab[0];
  EXPECT_EQ(masked, hs::ceil_count(0.2, g.node_count()));
  EXPECT_EQ(v.edge_count(), g.edge_count());
  EXPECT_FALSE(hs::legality_check(v, valences()).legal);
  EXPECT_THROW(hs::augment(hs::testing::path_graph(3), hs::AugmentKind::MaskAttr, 0.5, rng), hs::PreconditionError);
}

TEST(Augment, RwrStarMatchesAbsorbingChain) {
  auto star = labeled(5, {{0, 1}, {0, 2}, {0, 3}, {0, 4}});
  expect_rwr_matches(star, 0.6, 5);
}

TEST(Augment, RwrTadpoleMatchesAbsorbingChain) {
  auto tadpole = labeled(5, {{0, 1}, {1, 2}, {2, 0}, {2, 3}, {3, 4}});
  expect_rwr_matches(tadpole, 0.6, 6);
  expect_rwr_matches(tadpole, 0.8, 7);
}

TEST(Augment, RwrStopsAtComponent) {
  auto g = labeled(4, {{0, 1}});
  hs::Rng rng(8);
  for (int t = 0; t < 50; ++t) {
    auto v = hs::augment(g, hs::AugmentKind::RwrSubgraph, 1.0, rng);
    EXPECT_LE(v.node_count(), 2u);
  }
}

TEST(Augment, OutputsAreValidGraphs) {
  const auto& ds = hs::testing::desk_corpus();
  hs::Rng rng(9);
  for (std::size_t i = 0; i < ds.size(); i += 7) {
    for (auto kind : {hs::AugmentKind::DropNode, hs::AugmentKind::DropEdge, hs::AugmentKind::MaskAttr,
                      hs::AugmentKind::RwrSubgraph}) {
      auto v = hs::augment(ds[i], kind, 0.25, rng, ds.node_vocab);
      std::istringstream in(hs::serialize_graph(v) + "\n");
      auto back = hs::parse_graph_jsonl(in);
      EXPECT_EQ(hs::serialize_graph(back[0]), hs::serialize_graph(v));
    }
  }
}

TEST(Legality, Examples) {
  hs::AttributedGraph carbon("c", 1, {}, {{5}});
  EXPECT_TRUE(hs::legality_check(carbon, valences()).legal);

  hs::AttributedGraph pentavalent("c5", 6, {{0, 1}, {0, 2}, {0, 3}, {0, 4}, {0, 5}}, {{5}, {0}, {0}, {0}, {0}, {0}});
  auto r = hs::legality_check(pentavalent, valences());
  EXPECT_FALSE(r.legal);
  EXPECT_EQ(r.node, 0u);

  hs::AttributedGraph split("s", 2, {}, {{5}, {5}});
  r = hs::legality_check(split, valences());
  EXPECT_FALSE(r.legal);
  EXPECT_FALSE(r.node);

  hs::AttributedGraph doubled("o2", 2, {{0, 1}}, {{7}, {7}}, {{2}});
  EXPECT_TRUE(hs::legality_check(doubled, valences()).legal);
  hs::AttributedGraph tripled("o2", 2, {{0, 1}}, {{7}, {7}}, {{3}});
  EXPECT_FALSE(hs::legality_check(tripled, valences()).legal);

  EXPECT_FALSE(hs::legality_check(hs::AttributedGraph("e", 0, {}), valences()).legal);
  EXPECT_THROW(hs::legality_check(hs::testing::path_graph(2), valences()), hs::PreconditionError);
}

TEST(Legality, DeskCorpusIsLegal) {
  for (const auto& g : hs::testing::desk_corpus().graphs) EXPECT_TRUE(hs::legality_check(g, valences()).legal) << g.id();
}

TEST(Sweep, ZeroRatio) {
  const auto& ds = hs::testing::desk_corpus();
  std::vector<double> ratios{0.0};
  std::vector<std::uint64_t> seeds{0, 1};
  auto rep = hs::similarity_sweep(ds, hs::MorganTanimoto(), hs::AugmentKind::DropNode, ratios, seeds, 50, &valences());
  EXPECT_DOUBLE_EQ(rep.mean_sim[0], 1.0);
  EXPECT_DOUBLE_EQ((*rep.legal_fraction)[0], 1.0);
}

TEST(Sweep, DeterministicAndParallelSafe) {
  const auto& ds = hs::testing::desk_corpus();
  std::vector<double> ratios{0.1, 0.2};
  std::vector<std::uint64_t> seeds{3};
  hs::MorganTanimoto fp;
  hs::WorkerPool pool(8);
  auto a = hs::sweep_csv(hs::similarity_sweep(ds, fp, hs::AugmentKind::DropEdge, ratios, seeds, 60, &valences()));
  auto b = hs::sweep_csv(
      hs::similarity_sweep(ds, fp, hs::AugmentKind::DropEdge, ratios, seeds, 60, &valences(), pool.executor()));
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.substr(0, a.find('\n')), "kind,ratio,mean_sim,legal_frac,seed_count");
  std::vector<double> unsorted{0.2, 0.1};
  EXPECT_THROW(hs::similarity_sweep(ds, fp, hs::AugmentKind::DropEdge, unsorted, seeds, 5), hs::PreconditionError);
}
