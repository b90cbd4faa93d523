#include <gtest/gtest.h>

#include <boost/math/distributions/chi_squared.hpp>

#include "support.hpp"

namespace hs = hiersample;

namespace {

// Every node always predicts class 0 with certainty, so every PScore is 1.
struct ConstantPredictor final : hs::NodePredictor {
  std::size_t classes() const override { return 3; }
  std::vector<hs::ClassDistribution> predict(const hs::AttributedGraph& g, std::span<const hs::NodeIndex>) const override {
    return std::vector<hs::ClassDistribution>(g.node_count(), {1.0, 0.0, 0.0});
  }
};

double chi_square_uniform(const std::vector<double>& counts) {
  double total = 0.0;
  for (double c : counts) total += c;
  const double e = total / double(counts.size());
  double chi2 = 0.0;
  for (double c : counts) chi2 += (c - e) * (c - e) / e;
  return chi2;
}

double critical(std::size_t dof) {
  boost::math::chi_squared d(static_cast<double>(dof));
  return boost::math::quantile(boost::math::complement(d, 0.01));
}

const hs::ReferencePredictor& desk_model() {
  static const hs::ReferencePredictor m(hs::testing::desk_corpus().node_vocab, {});
  return m;
}

}  // namespace

TEST(Predictor, RowsAreDistributions) {
  const auto& ds = hs::testing::desk_corpus();
  const auto& m = desk_model();
  EXPECT_EQ(m.classes(), static_cast<std::size_t>(ds.node_vocab[0]));
  std::vector<hs::NodeIndex> masked{0, 3};
  for (std::size_t i = 0; i < 20; ++i) {
    for (const auto& row : m.predict(ds[i], masked)) {
      ASSERT_EQ(row.size(), m.classes());
      double sum = 0.0;
      for (double p : row) {
        EXPECT_GE(p, 0.0);
        sum += p;
      }
      EXPECT_NEAR(sum, 1.0, 1e-9);
    }
  }
}

TEST(Predictor, PermutationEquivariant) {
  const auto& ds = hs::testing::desk_corpus();
  const auto& m = desk_model();
  hs::Rng rng(1);
  for (std::size_t i = 0; i < 30; ++i) {
    const auto& g = ds[i];
    auto perm = hs::testing::random_permutation(g.node_count(), rng);
    auto pg = hs::testing::permuted(g, perm);
    std::vector<hs::NodeIndex> masked{1, 2}, pmasked{perm[1], perm[2]};
    auto a = m.predict(g, masked);
    auto b = m.predict(pg, pmasked);
    for (hs::NodeIndex v = 0; v < g.node_count(); ++v) {
      for (std::size_t c = 0; c < m.classes(); ++c) ASSERT_NEAR(a[v][c], b[perm[v]][c], 1e-12);
    }
  }
}

TEST(Predictor, PureAndSeeded) {
  const auto& g = hs::testing::desk_corpus()[7];
  std::vector<hs::NodeIndex> masked{4};
  const auto& m = desk_model();
  hs::ReferencePredictor twin(hs::testing::desk_corpus().node_vocab, {});
  EXPECT_EQ(m.predict(g, masked), m.predict(g, masked));
  EXPECT_EQ(m.predict(g, masked), twin.predict(g, masked));
  hs::ReferencePredictor::Options other;
  other.seed = 1;
  EXPECT_NE(m.predict(g, masked), hs::ReferencePredictor(hs::testing::desk_corpus().node_vocab, other).predict(g, masked));
  EXPECT_NE(m.predict(g, masked), m.predict(g, {}));
}

TEST(Predictor, IsolatedTwinsAgree) {
  hs::AttributedGraph g("iso", 2, {}, {{5}, {5}});
  hs::ReferencePredictor m({17}, {});
  auto y = m.predict(g, {});
  EXPECT_EQ(y[0], y[1]);
}

TEST(PScore, SameMaskSetOnOneHot) {
  ConstantPredictor m;
  auto g = hs::testing::path_graph(4);
  std::vector<hs::NodeIndex> s{1};
  EXPECT_EQ(hs::pscore(0, m, g, s, s), 1.0);
  EXPECT_THROW(hs::pscore(1, m, g, s, s), hs::PreconditionError);
}

TEST(PScore, LargeCrossEntropyClampsToZero) {
  std::vector<double> prev{1.0, 0.0, 0.0}, cur{1e-6, 0.5, 0.5 - 1e-6};
  EXPECT_NEAR(hs::cross_entropy(prev, cur), 13.815510557964274, 1e-9);
  EXPECT_EQ(hs::pscore_from(prev, cur), 0.0);
  std::vector<double> soft{0.5, 0.5, 0.0};
  EXPECT_NEAR(hs::pscore_from(soft, soft), 1.0 - std::log(2.0), 1e-15);
  std::vector<double> zero{0.0, 1.0, 0.0};
  EXPECT_TRUE(std::isinf(hs::cross_entropy(prev, zero)));
  EXPECT_EQ(hs::pscore_from(prev, zero), 0.0);
}

TEST(PScore, NeverNegativeOnDeskCorpus) {
  const auto& ds = hs::testing::desk_corpus();
  for (std::size_t i = 0; i < 10; ++i) {
    std::vector<hs::NodeIndex> prev{0}, cur{0, 1};
    for (hs::NodeIndex v = 2; v < ds[i].node_count(); ++v) EXPECT_GE(hs::pscore(v, desk_model(), ds[i], cur, prev), 0.0);
  }
}

TEST(Schedule, CeilingWithTruncatedLastStep) {
  EXPECT_EQ(hs::mask_schedule(20, 0.15, 1), (std::vector<std::size_t>{3}));
  EXPECT_EQ(hs::mask_schedule(20, 0.15, 2), (std::vector<std::size_t>{2, 1}));
  EXPECT_EQ(hs::mask_schedule(20, 0.15, 5), (std::vector<std::size_t>{1, 1, 1, 0, 0}));
  EXPECT_EQ(hs::mask_schedule(40, 0.15, 5), (std::vector<std::size_t>{2, 2, 2, 0, 0}));
  EXPECT_THROW(hs::mask_schedule(20, 0.15, 0), hs::PreconditionError);
}

TEST(AdaptiveMask, StructureOfPlan) {
  const auto& ds = hs::testing::desk_corpus();
  hs::Rng rng(3);
  for (std::size_t i = 0; i < 40; ++i) {
    const auto& g = ds[i];
    const std::size_t alpha = g.node_count() / 5;
    auto plan = hs::adaptive_mask(g, desk_model(), 4, alpha, rng);
    ASSERT_EQ(plan.steps.size(), 4u);
    EXPECT_EQ(plan.total(), 4 * alpha);
    std::set<hs::NodeIndex> all;
    for (const auto& s : plan.steps) {
      EXPECT_EQ(s.size(), alpha);
      for (auto v : s) {
        EXPECT_LT(v, g.node_count());
        EXPECT_TRUE(all.insert(v).second);
      }
    }
    EXPECT_TRUE(plan.scores[0].empty());
    for (std::size_t t = 1; t < 4; ++t) {
      EXPECT_EQ(plan.scores[t].size(), g.node_count() - t * alpha);
      for (const auto& [v, s] : plan.scores[t]) EXPECT_GE(s, 0.0);
    }
  }
  EXPECT_THROW(hs::adaptive_mask(ds[0], desk_model(), 3, ds[0].node_count(), rng), hs::PreconditionError);
  EXPECT_THROW(hs::adaptive_mask(ds[0], desk_model(), 0, 1, rng), hs::PreconditionError);
}

TEST(AdaptiveMask, SingleStepIsUniformMasking) {
  const auto& ds = hs::testing::desk_corpus();
  for (std::size_t i = 0; i < 30; ++i) {
    auto a = hs::Rng::substream(5, {i});
    auto b = hs::Rng::substream(5, {i});
    auto plan = hs::adaptive_mask(ds[i], desk_model(), 1, 3, a);
    EXPECT_EQ(plan.masked, hs::uniform_mask(ds[i], 3, b));
  }
}

TEST(AdaptiveMask, EqualScoresGiveUniformLaterSteps) {
  ConstantPredictor m;
  auto g = hs::testing::path_graph(8);
  std::vector<double> counts(8, 0.0);
  hs::Rng rng(6);
  for (int r = 0; r < 100000; ++r) counts[hs::adaptive_mask(g, m, 2, 1, rng).steps[1][0]] += 1.0;
  EXPECT_LT(chi_square_uniform(counts), critical(7));
}

TEST(AdaptiveMask, ZeroScoresFallBackToUniform) {
  std::vector<hs::NodeIndex> pool{2, 4, 6, 8, 10};
  std::vector<double> counts(5, 0.0);
  hs::Rng rng(7);
  for (int r = 0; r < 100000; ++r) {
    auto pick = hs::detail::draw_by_score(pool, std::vector<double>(5, 0.0), 1, rng);
    counts[pick[0] / 2 - 1] += 1.0;
  }
  EXPECT_LT(chi_square_uniform(counts), critical(4));
}

TEST(AdaptiveMask, DrawsProportionalToScore) {
  std::vector<hs::NodeIndex> pool{0, 1, 2};
  std::vector<double> w{0.5, 0.3, 0.2};
  std::vector<double> counts(3, 0.0);
  hs::Rng rng(8);
  for (int r = 0; r < 100000; ++r) counts[hs::detail::draw_by_score(pool, w, 1, rng)[0]] += 1.0;
  double chi2 = 0.0;
  for (std::size_t k = 0; k < 3; ++k) chi2 += std::pow(counts[k] - 1e5 * w[k], 2) / (1e5 * w[k]);
  EXPECT_LT(chi2, critical(2));
}

TEST(Dispersion, ByHand) {
  auto p5 = hs::testing::path_graph(5);
  std::vector<hs::NodeIndex> adj{1, 2}, ends{0, 4}, three{0, 2, 4};
  EXPECT_EQ(*hs::avg_min_masked_distance(p5, adj).mean, 1.0);
  EXPECT_EQ(*hs::avg_min_masked_distance(p5, ends).mean, 4.0);
  EXPECT_EQ(*hs::avg_min_masked_distance(p5, three).mean, 2.0);
  std::vector<hs::NodeIndex> one{0};
  EXPECT_THROW(hs::avg_min_masked_distance(p5, one), hs::PreconditionError);
}

TEST(Dispersion, UnreachableExcluded) {
  hs::AttributedGraph g("g", 5, {{0, 1}, {1, 2}});
  std::vector<hs::NodeIndex> masked{0, 2, 4};
  auto d = hs::avg_min_masked_distance(g, masked);
  EXPECT_EQ(*d.mean, 2.0);
  EXPECT_EQ(d.excluded, 1u);
  std::vector<hs::NodeIndex> apart{0, 4};
  d = hs::avg_min_masked_distance(g, apart);
  EXPECT_FALSE(d.mean);
  EXPECT_EQ(d.excluded, 2u);
}

TEST(MaskPlan, RecordFormat) {
  auto g = hs::testing::path_graph(5, "p");
  hs::MaskPlan plan{"p", {{0}, {4}}, {{}, {}}, {0, 4}};
  EXPECT_EQ(hs::mask_plan_record(g, plan), R"({"id":"p","steps":[[0],[4]],"metric":4.0})");
  hs::MaskPlan lone{"p", {{0}}, {{}}, {0}};
  EXPECT_EQ(hs::mask_plan_record(g, lone), R"({"id":"p","steps":[[0]],"metric":null})");
}
