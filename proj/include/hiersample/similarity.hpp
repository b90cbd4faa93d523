#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "json.hpp"

#include "hiersample/errors.hpp"
#include "hiersample/graph.hpp"
#include "hiersample/hashing.hpp"
#include "hiersample/parallel.hpp"

namespace hiersample {

/// Similarity between graphs i and j of an indexed collection.
class PairScorer {
 public:
  virtual ~PairScorer() = default;
  virtual double operator()(std::size_t i, std::size_t j) const = 0;
};

/// Pluggable graph similarity. Implementations return values in [0, 1], are
/// symmetric and self-normalized (sim(G, G) = 1).
class SimilarityMeasure {
 public:
  virtual ~SimilarityMeasure() = default;
  virtual std::string name() const = 0;
  // Name plus every parameter that changes scores.
  virtual std::string digest() const = 0;
  virtual double similarity(const AttributedGraph& a, const AttributedGraph& b) const = 0;

  // Scorer over a fixed collection. Measures with per-graph features override
  // this to compute them once; the default scores pairs from scratch.
  virtual std::unique_ptr<PairScorer> index(std::span<const AttributedGraph> graphs,
                                            const ParallelFor& = run_serial) const {
    struct Direct final : PairScorer {
      const SimilarityMeasure* measure;
      std::span<const AttributedGraph> graphs;
      double operator()(std::size_t i, std::size_t j) const override {
        return measure->similarity(graphs[i], graphs[j]);
      }
    };
    auto s = std::make_unique<Direct>();
    s->measure = this;
    s->graphs = graphs;
    return s;
  }
};

// ---------------------------------------------------------------------------
// Weisfeiler-Lehman subtree kernel

/// Per-round label histograms, each sorted by label.
struct WlFeatures {
  std::vector<std::vector<std::pair<std::uint64_t, std::uint64_t>>> rounds;
};

inline WlFeatures wl_features(const AttributedGraph& g, std::size_t iterations) {
  const std::size_t n = g.node_count();
  std::vector<std::uint64_t> labels(n);
  for (NodeIndex v = 0; v < n; ++v) {
    // Unattributed graphs hash the empty tuple, i.e. every node starts with the same label.
    labels[v] = Fnv1a64().codes(g.node_attrs(v)).value();
  }
  WlFeatures f;
  f.rounds.reserve(iterations + 1);
  std::vector<std::uint64_t> next(n), scratch;
  for (std::size_t round = 0;; ++round) {
    std::vector<std::uint64_t> sorted = labels;
    std::sort(sorted.begin(), sorted.end());
    auto& hist = f.rounds.emplace_back();
    for (std::size_t k = 0; k < sorted.size();) {
      std::size_t m = k;
      while (m < sorted.size() && sorted[m] == sorted[k]) ++m;
      hist.emplace_back(sorted[k], m - k);
      k = m;
    }
    if (round == iterations) break;
    for (NodeIndex v = 0; v < n; ++v) {
      scratch.clear();
      for (const auto& nb : g.neighbors(v)) scratch.push_back(labels[nb.node]);
      std::sort(scratch.begin(), scratch.end());
      Fnv1a64 h;
      h.u64(labels[v]).u64(scratch.size());
      for (auto l : scratch) h.u64(l);
      next[v] = h.value();
    }
    labels.swap(next);
  }
  return f;
}

inline double wl_kernel(const WlFeatures& a, const WlFeatures& b) {
  double k = 0.0;
  const std::size_t rounds = std::min(a.rounds.size(), b.rounds.size());
  for (std::size_t r = 0; r < rounds; ++r) {
    const auto& x = a.rounds[r];
    const auto& y = b.rounds[r];
    std::size_t i = 0, j = 0;
    while (i < x.size() && j < y.size()) {
      if (x[i].first < y[j].first) {
        ++i;
      } else if (y[j].first < x[i].first) {
        ++j;
      } else {
        k += static_cast<double>(x[i].second) * static_cast<double>(y[j].second);
        ++i;
        ++j;
      }
    }
  }
  return k;
}

inline double wl_normalized(const WlFeatures& a, double self_a, const WlFeatures& b, double self_b) {
  return wl_kernel(a, b) / std::sqrt(self_a * self_b);
}

/// Normalized WL subtree-kernel similarity; round-0 histograms are included.
inline double wl_similarity(const AttributedGraph& g1, const AttributedGraph& g2, std::size_t iterations) {
  if (g1.node_count() == 0 || g2.node_count() == 0) throw PreconditionError("wl_similarity: empty graph");
  auto f1 = wl_features(g1, iterations);
  auto f2 = wl_features(g2, iterations);
  return wl_normalized(f1, wl_kernel(f1, f1), f2, wl_kernel(f2, f2));
}

class WlSimilarity final : public SimilarityMeasure {
 public:
  explicit WlSimilarity(std::size_t iterations = 3) : iterations_(iterations) {}

  std::string name() const override { return "wl"; }
  std::string digest() const override { return "wl:h=" + std::to_string(iterations_); }
  double similarity(const AttributedGraph& a, const AttributedGraph& b) const override {
    return wl_similarity(a, b, iterations_);
  }

  std::unique_ptr<PairScorer> index(std::span<const AttributedGraph> graphs,
                                    const ParallelFor& parallel = run_serial) const override {
    struct Indexed final : PairScorer {
      std::vector<WlFeatures> features;
      std::vector<double> self;
      double operator()(std::size_t i, std::size_t j) const override {
        return wl_normalized(features[i], self[i], features[j], self[j]);
      }
    };
    auto s = std::make_unique<Indexed>();
    s->features.resize(graphs.size());
    s->self.resize(graphs.size());
    parallel(graphs.size(), [&](std::size_t i) {
      if (graphs[i].node_count() == 0) throw PreconditionError("wl_similarity: empty graph '" + graphs[i].id() + "'");
      s->features[i] = wl_features(graphs[i], iterations_);
      s->self[i] = wl_kernel(s->features[i], s->features[i]);
    });
    return s;
  }

  std::size_t iterations() const noexcept { return iterations_; }

 private:
  std::size_t iterations_;
};

// ---------------------------------------------------------------------------
// Circular (Morgan/ECFP-style) fingerprints

class Fingerprint {
 public:
  Fingerprint() = default;
  Fingerprint(std::size_t nbits, std::size_t radius) : nbits_(nbits), radius_(radius), words_((nbits + 63) / 64, 0) {}

  void set(std::size_t bit) { words_[bit / 64] |= std::uint64_t{1} << (bit % 64); }
  bool test(std::size_t bit) const { return (words_[bit / 64] >> (bit % 64)) & 1U; }
  std::size_t nbits() const noexcept { return nbits_; }
  std::size_t radius() const noexcept { return radius_; }
  std::span<const std::uint64_t> words() const noexcept { return words_; }

  std::size_t popcount() const noexcept {
    std::size_t c = 0;
    for (auto w : words_) c += static_cast<std::size_t>(std::popcount(w));
    return c;
  }

  // Bit k is the (k % 8)-th least significant bit of byte k / 8; bytes in order.
  std::string hex() const {
    std::vector<std::uint8_t> bytes((nbits_ + 7) / 8, 0);
    for (std::size_t k = 0; k < nbits_; ++k) {
      if (test(k)) bytes[k / 8] |= static_cast<std::uint8_t>(1U << (k % 8));
    }
    return to_hex(bytes);
  }

  friend bool operator==(const Fingerprint&, const Fingerprint&) = default;

 private:
  std::size_t nbits_ = 0;
  std::size_t radius_ = 0;
  std::vector<std::uint64_t> words_;
};

inline Fingerprint morgan_fingerprint(const AttributedGraph& g, std::size_t radius = 2, std::size_t nbits = 2048) {
  if (!g.attributed() && g.node_count() > 0) {
    throw PreconditionError("morgan_fingerprint: graph '" + g.id() + "' has no node attributes");
  }
  if (nbits == 0) throw PreconditionError("morgan_fingerprint: nbits must be positive");
  Fingerprint fp(nbits, radius);
  const std::size_t n = g.node_count();
  std::vector<std::uint64_t> ids(n), next(n);
  for (NodeIndex v = 0; v < n; ++v) {
    ids[v] = Fnv1a64().codes(g.node_attrs(v)).value();
    fp.set(ids[v] % nbits);
  }
  struct Env {
    std::span<const AttrCode> bond;
    std::uint64_t id;
  };
  std::vector<Env> env;
  for (std::size_t r = 1; r <= radius; ++r) {
    for (NodeIndex v = 0; v < n; ++v) {
      env.clear();
      for (const auto& nb : g.neighbors(v)) env.push_back({g.edge_attrs(nb.edge), ids[nb.node]});
      std::sort(env.begin(), env.end(), [](const Env& a, const Env& b) {
        if (!std::ranges::equal(a.bond, b.bond)) return std::ranges::lexicographical_compare(a.bond, b.bond);
        return a.id < b.id;
      });
      Fnv1a64 h;
      h.u64(ids[v]).u64(env.size());
      for (const auto& e : env) h.codes(e.bond).u64(e.id);
      next[v] = h.value();
      fp.set(next[v] % nbits);
    }
    ids.swap(next);
  }
  return fp;
}

/// Jaccard index over set bits; two all-zero fingerprints score 1.
inline double tanimoto(const Fingerprint& a, const Fingerprint& b) {
  if (a.nbits() != b.nbits()) throw PreconditionError("tanimoto: fingerprint lengths differ");
  std::size_t both = 0, either = 0;
  auto wa = a.words();
  auto wb = b.words();
  for (std::size_t k = 0; k < wa.size(); ++k) {
    both += static_cast<std::size_t>(std::popcount(wa[k] & wb[k]));
    either += static_cast<std::size_t>(std::popcount(wa[k] | wb[k]));
  }
  if (either == 0) return 1.0;
  return static_cast<double>(both) / static_cast<double>(either);
}

class MorganTanimoto final : public SimilarityMeasure {
 public:
  explicit MorganTanimoto(std::size_t radius = 2, std::size_t nbits = 2048) : radius_(radius), nbits_(nbits) {}

  std::string name() const override { return "morgan"; }
  std::string digest() const override {
    return "morgan:r=" + std::to_string(radius_) + ",nbits=" + std::to_string(nbits_) + ",hash=fnv1a64";
  }
  double similarity(const AttributedGraph& a, const AttributedGraph& b) const override {
    return tanimoto(fingerprint(a), fingerprint(b));
  }
  Fingerprint fingerprint(const AttributedGraph& g) const { return morgan_fingerprint(g, radius_, nbits_); }

  std::unique_ptr<PairScorer> index(std::span<const AttributedGraph> graphs,
                                    const ParallelFor& parallel = run_serial) const override {
    struct Indexed final : PairScorer {
      std::vector<Fingerprint> fps;
      double operator()(std::size_t i, std::size_t j) const override { return tanimoto(fps[i], fps[j]); }
    };
    auto s = std::make_unique<Indexed>();
    s->fps.resize(graphs.size());
    parallel(graphs.size(), [&](std::size_t i) { s->fps[i] = fingerprint(graphs[i]); });
    return s;
  }

  std::size_t radius() const noexcept { return radius_; }
  std::size_t nbits() const noexcept { return nbits_; }

 private:
  std::size_t radius_;
  std::size_t nbits_;
};

struct ScoredPair {
  std::size_t i;
  std::size_t j;
  double sim;
};

/// One `{"i": id, "j": id, "sim": float}` record per line.
inline std::string similarity_jsonl(std::span<const AttributedGraph> graphs, std::span<const ScoredPair> pairs) {
  std::string out;
  for (const auto& p : pairs) {
    nlohmann::ordered_json j;
    j["i"] = graphs[p.i].id();
    j["j"] = graphs[p.j].id();
    j["sim"] = p.sim;
    out += j.dump();
    out += '\n';
  }
  return out;
}

}  // namespace hiersample
