#include <gtest/gtest.h>

#include <sstream>

#include "support.hpp"

namespace hs = hiersample;

namespace {

// Scores from an explicit symmetric table.
struct TableScorer final : hs::PairScorer {
  std::map<std::pair<std::size_t, std::size_t>, double> sims;
  double operator()(std::size_t i, std::size_t j) const override {
    if (i == j) return 1.0;
    return sims.at({std::min(i, j), std::max(i, j)});
  }
};

hs::GraphDataset single_atoms(const std::vector<hs::AttrCode>& codes) {
  std::vector<hs::AttributedGraph> gs;
  for (std::size_t k = 0; k < codes.size(); ++k) gs.emplace_back("a" + std::to_string(k), 1, std::vector<hs::Edge>{}, std::vector<std::vector<hs::AttrCode>>{{codes[k]}});
  return hs::make_dataset(std::move(gs));
}

hs::CandidateLists everyone(std::size_t n) {
  hs::CandidateLists c(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    for (std::uint32_t j = 0; j < n; ++j) {
      if (i != j) c[i].push_back(j);
    }
  }
  return c;
}

const hs::SimilarityHierarchy& desk_hierarchy() {
  static const hs::SimilarityHierarchy h = [] {
    const auto& ds = hs::testing::desk_corpus();
    auto masses = hs::default_mass_table();
    auto cands = hs::select_candidates(ds, {}, &masses);
    return hs::build_hierarchy(ds, hs::MorganTanimoto(), 0.5, cands);
  }();
  return h;
}

}  // namespace

TEST(Candidates, WeightTolerance) {
  hs::MassTable masses({{0, 100.0}, {1, 109.0}, {2, 111.0}});
  auto ds = single_atoms({0, 1, 2});
  auto c = hs::select_candidates(ds, {}, &masses);
  EXPECT_EQ(c[0], (std::vector<std::uint32_t>{1}));  // 9% passes, 11% does not
  for (std::uint32_t i = 0; i < 3; ++i) EXPECT_EQ(std::count(c[i].begin(), c[i].end(), i), 0);
}

TEST(Candidates, RingAndAtomFilters) {
  std::vector<hs::AttributedGraph> gs;
  std::vector<std::vector<hs::AttrCode>> six(6, {5}), seven(7, {5});
  auto ring = hs::testing::cycle_graph(6);
  auto chain = hs::testing::path_graph(6);
  gs.emplace_back("ring", 6, std::vector<hs::Edge>(ring.edges().begin(), ring.edges().end()), six);
  gs.emplace_back("chain", 6, std::vector<hs::Edge>(chain.edges().begin(), chain.edges().end()), six);
  hs::AttributedGraph bicyclic("bi", 7, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}, {5, 0}, {0, 6}, {6, 3}}, seven);
  gs.push_back(bicyclic);
  auto ds = hs::make_dataset(std::move(gs));
  auto masses = hs::default_mass_table();
  hs::CandidatePolicy p;
  p.weight_tol = 0.5;
  auto c = hs::select_candidates(ds, p, &masses);
  EXPECT_EQ(c[1], (std::vector<std::uint32_t>{0}));  // chain: 0 rings, bicyclic has 2
  p.atom_tol = 0;
  c = hs::select_candidates(ds, p, &masses);
  EXPECT_EQ(c[0], (std::vector<std::uint32_t>{1}));
}

TEST(Candidates, CapAndSortOrder) {
  std::vector<hs::AttrCode> codes(40, 5);
  auto ds = single_atoms(codes);
  auto masses = hs::default_mass_table();
  hs::CandidatePolicy p;
  p.max_candidates = 7;
  auto c = hs::select_candidates(ds, p, &masses);
  for (const auto& row : c) EXPECT_LE(row.size(), 7u);
  EXPECT_EQ(c[0], (std::vector<std::uint32_t>{1, 10, 11, 12, 13, 14, 15}));  // equal weights: id strings a1, a10, ...
}

TEST(Candidates, MolecularNeedsMasses) {
  EXPECT_THROW(hs::select_candidates(single_atoms({0}), {}, nullptr), hs::PreconditionError);
}

TEST(Candidates, StructuralMode) {
  std::vector<hs::AttributedGraph> gs{hs::testing::path_graph(20, "p20"), hs::testing::path_graph(21, "p21"),
                                      hs::testing::cycle_graph(20, "c20"), hs::testing::path_graph(25, "p25")};
  auto ds = hs::make_dataset(std::move(gs));
  hs::CandidatePolicy p;
  p.mode = hs::CandidatePolicy::Mode::Structural;
  auto c = hs::select_candidates(ds, p, nullptr);
  EXPECT_EQ(c[0], (std::vector<std::uint32_t>{2, 1}));  // node and edge counts within 10% of 20 nodes, 19 edges
  EXPECT_TRUE(c[3].empty());
}

TEST(Hierarchy, ToyThreeGraphs) {
  auto ds = single_atoms({0, 0, 0});
  TableScorer s;
  s.sims = {{{0, 1}, 0.9}, {{0, 2}, 0.4}, {{1, 2}, 0.8}};
  auto built = hs::build_hierarchy_scored(ds, s, 0.5, everyone(3), "toy");
  const auto& h = built.hierarchy;
  EXPECT_EQ(h.edge_count(), 2u);
  EXPECT_EQ(h.weight(0, 1), 0.9);
  EXPECT_EQ(h.weight(1, 2), 0.8);
  EXPECT_FALSE(h.connected(0, 2));
  EXPECT_EQ(built.evaluated.size(), 3u);
}

TEST(Hierarchy, UnionOfDirectedCandidates) {
  auto ds = single_atoms({0, 0});
  TableScorer s;
  s.sims = {{{0, 1}, 0.7}};
  hs::CandidateLists one_way{{1}, {}};
  EXPECT_EQ(hs::build_hierarchy_scored(ds, s, 0.5, one_way, "toy").hierarchy.edge_count(), 1u);
}

TEST(Hierarchy, ThresholdAboveEverything) {
  auto ds = single_atoms({0, 0, 0});
  TableScorer s;
  s.sims = {{{0, 1}, 0.9}, {{0, 2}, 0.4}, {{1, 2}, 0.8}};
  EXPECT_EQ(hs::build_hierarchy_scored(ds, s, 0.95, everyone(3), "toy").hierarchy.edge_count(), 0u);
  EXPECT_THROW(hs::build_hierarchy_scored(ds, s, 1.0, everyone(3), "toy"), hs::PreconditionError);
}

TEST(Hierarchy, InvariantsOnDeskCorpus) {
  const auto& ds = hs::testing::desk_corpus();
  const auto& h = desk_hierarchy();
  hs::MorganTanimoto fp;
  std::size_t checked = 0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    for (const auto& l : h.neighbors(i)) {
      EXPECT_NE(l.node, i);
      EXPECT_GE(l.weight, h.tau());
      EXPECT_EQ(h.weight(l.node, i), l.weight);
      if ((i * 31 + l.node) % 50 == 0) {
        EXPECT_EQ(l.weight, fp.similarity(ds[i], ds[l.node]));
        ++checked;
      }
    }
  }
  EXPECT_GT(checked, 0u);
  EXPECT_GT(h.edge_count(), 100u);
}

TEST(Hierarchy, ParallelBuildMatchesSerial) {
  const auto& ds = hs::testing::desk_corpus();
  auto masses = hs::default_mass_table();
  hs::WorkerPool pool(8);
  auto cands = hs::select_candidates(ds, {}, &masses, pool.executor());
  auto h = hs::build_hierarchy(ds, hs::MorganTanimoto(), 0.5, cands, pool.executor());
  EXPECT_EQ(hs::serialize_hierarchy(h), hs::serialize_hierarchy(desk_hierarchy()));
}

TEST(Hierarchy, FileRoundTrip) {
  auto text = hs::serialize_hierarchy(desk_hierarchy());
  std::istringstream in(text);
  EXPECT_EQ(hs::serialize_hierarchy(hs::parse_hierarchy(in)), text);
}

TEST(Hierarchy, FileErrors) {
  auto parse = [](const std::string& s) {
    std::istringstream in(s);
    return hs::parse_hierarchy(in);
  };
  EXPECT_THROW(parse(""), hs::DataError);
  EXPECT_THROW(parse("{\"tau\":0.5,\"measure\":\"m\",\"n\":2}\n{\"id\":\"a\",\"nbrs\":[],\"w\":[]}\n"), hs::DataError);
  EXPECT_THROW(parse("{\"tau\":0.5,\"measure\":\"m\",\"n\":1}\n{\"id\":\"a\",\"nbrs\":[\"b\"],\"w\":[0.7]}\n"),
               hs::ParseError);
  EXPECT_THROW(parse("{\"tau\":0.5,\"measure\":\"m\",\"n\":2}\n{\"id\":\"a\",\"nbrs\":[\"b\"],\"w\":[0.7]}\n"
                     "{\"id\":\"b\",\"nbrs\":[\"a\"],\"w\":[0.6]}\n"),
               hs::DataError);
  EXPECT_THROW(parse("{\"tau\":0.5,\"measure\":\"m\",\"n\":2}\n{\"id\":\"a\",\"nbrs\":[\"b\"],\"w\":[0.2]}\n"
                     "{\"id\":\"b\",\"nbrs\":[\"a\"],\"w\":[0.2]}\n"),
               hs::DataError);
}

TEST(HopProfile, HopOneAtLeastTauAndIsolatedAbsent) {
  const auto& ds = hs::testing::desk_corpus();
  const auto& h = desk_hierarchy();
  auto scorer = hs::MorganTanimoto().index(ds.graphs);
  std::vector<std::uint32_t> all(h.size());
  for (std::uint32_t i = 0; i < h.size(); ++i) all[i] = i;
  auto prof = hs::hop_similarity_profile(h, *scorer, all, 4);
  ASSERT_TRUE(prof[0]);
  EXPECT_GE(*prof[0], h.tau());

  auto iso = hs::testing::make_hierarchy(3, {{0, 1, 0.5}});
  TableScorer s;
  s.sims = {{{0, 1}, 0.5}, {{0, 2}, 0.1}, {{1, 2}, 0.1}};
  std::vector<std::uint32_t> t{2};
  for (const auto& d : hs::hop_similarity_profile(iso, s, t, 3)) EXPECT_FALSE(d);
}

TEST(HopProfile, MatchesBruteForce) {
  // Path g0 - g1 - g2 - g3 plus isolated g4, with arbitrary pair scores.
  auto h = hs::testing::make_hierarchy(5, {{0, 1, 0.9}, {1, 2, 0.8}, {2, 3, 0.7}});
  TableScorer s;
  for (std::size_t i = 0; i < 5; ++i) {
    for (std::size_t j = i + 1; j < 5; ++j) s.sims[{i, j}] = 0.05 * double(i + 2 * j);
  }
  std::vector<std::uint32_t> t{0, 1};
  auto prof = hs::hop_similarity_profile(h, s, t, 4);
  // target 0: hop1 {1}, hop2 {2}, hop3 {3}; target 1: hop1 {0, 2}, hop2 {3}.
  EXPECT_NEAR(*prof[0], (s(0, 1) + (s(1, 0) + s(1, 2)) / 2) / 2, 1e-15);
  EXPECT_NEAR(*prof[1], (s(0, 2) + s(1, 3)) / 2, 1e-15);
  EXPECT_NEAR(*prof[2], s(0, 3), 1e-15);
  EXPECT_FALSE(prof[3]);
}
