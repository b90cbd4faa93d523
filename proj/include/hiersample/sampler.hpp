#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "json.hpp"

#include "hiersample/errors.hpp"
#include "hiersample/hierarchy.hpp"
#include "hiersample/parallel.hpp"
#include "hiersample/random.hpp"
#include "hiersample/similarity.hpp"

namespace hiersample {

enum class SamplingStrategy { FirstOrder, HighOrder };
enum class NegativePolicy { InBatch, DegreeWeighted };

inline SamplingStrategy parse_strategy(std::string_view s) {
  if (s == "first-order") return SamplingStrategy::FirstOrder;
  if (s == "high-order") return SamplingStrategy::HighOrder;
  throw PreconditionError("unknown sampling strategy '" + std::string(s) + "'");
}

inline NegativePolicy parse_negative_policy(std::string_view s) {
  if (s == "in-batch") return NegativePolicy::InBatch;
  if (s == "degree-weighted") return NegativePolicy::DegreeWeighted;
  throw PreconditionError("unknown negative policy '" + std::string(s) + "'");
}

struct SamplerConfig {
  SamplingStrategy strategy = SamplingStrategy::FirstOrder;
  std::optional<std::size_t> pos_count;  // unset: 3 first-order, 5 high-order
  std::size_t walk_length = 2;
  std::size_t walk_count = 5;
  std::size_t neg_count = 255;
  NegativePolicy negatives = NegativePolicy::InBatch;
  std::size_t batch_size = 256;
  std::uint64_t seed = 0;

  std::size_t positives() const {
    if (pos_count) return *pos_count;
    return strategy == SamplingStrategy::FirstOrder ? 3 : 5;
  }

  void validate() const {
    if (positives() < 1) throw PreconditionError("pos_count must be at least 1");
    if (strategy == SamplingStrategy::HighOrder && (walk_length < 1 || walk_count < 1)) {
      throw PreconditionError("high-order sampling needs walk length and walk count >= 1");
    }
    if (neg_count < 1) throw PreconditionError("neg_count must be at least 1");
  }
};

struct PairSample {
  std::uint32_t target = 0;
  std::vector<std::uint32_t> positives;
  std::vector<double> weights;  // sums to 1 when positives is nonempty
  std::vector<std::uint32_t> negatives;
  bool isolated = false;        // target has no hierarchy neighbors
};

struct TransitionProbability {
  std::uint32_t node;
  double p;
};

// P_i^+(x_j) = sim(i, j) / sum_k sim(i, k) over the one-hop neighbors of i.
inline std::vector<TransitionProbability> first_order_probabilities(const SimilarityHierarchy& h, std::size_t i) {
  std::vector<TransitionProbability> out;
  double total = 0.0;
  for (const auto& l : h.neighbors(i)) total += l.weight;
  for (const auto& l : h.neighbors(i)) out.push_back({l.node, l.weight / total});
  return out;
}

/// Draws up to n distinct one-hop neighbors; each draw picks among the remaining
/// neighbors with probability proportional to similarity.
inline PairSample first_order_sample(const SimilarityHierarchy& h, std::size_t i, std::size_t n, Rng& rng) {
  PairSample s;
  s.target = static_cast<std::uint32_t>(i);
  auto links = h.neighbors(i);
  if (links.empty()) {
    s.isolated = true;
    return s;
  }
  std::vector<double> remaining;
  remaining.reserve(links.size());
  for (const auto& l : links) remaining.push_back(l.weight);
  const std::size_t draws = std::min(n, links.size());
  double chosen_total = 0.0;
  for (std::size_t d = 0; d < draws; ++d) {
    auto k = rng.weighted_index(remaining);
    s.positives.push_back(links[k].node);
    s.weights.push_back(links[k].weight);
    chosen_total += links[k].weight;
    remaining[k] = 0.0;
  }
  for (auto& w : s.weights) w /= chosen_total;
  return s;
}

// One similarity-weighted walk of `length` steps from `start`; visit(node) is called per step.
template <typename Visit>
void similarity_walk(const SimilarityHierarchy& h, std::size_t start, std::size_t length, Rng& rng, Visit&& visit) {
  std::vector<double> w;
  std::size_t at = start;
  for (std::size_t step = 0; step < length; ++step) {
    auto links = h.neighbors(at);
    if (links.empty()) return;
    w.clear();
    for (const auto& l : links) w.push_back(l.weight);
    at = links[rng.weighted_index(w)].node;
    visit(static_cast<std::uint32_t>(at));
  }
}

/// Visit counts over k walks of l steps, excluding the start node.
inline std::map<std::uint32_t, std::uint64_t> walk_visit_counts(const SimilarityHierarchy& h, std::size_t i,
                                                                std::size_t l, std::size_t k, Rng& rng) {
  std::map<std::uint32_t, std::uint64_t> counts;
  for (std::size_t w = 0; w < k; ++w) {
    similarity_walk(h, i, l, rng, [&](std::uint32_t v) {
      if (v != i) ++counts[v];
    });
  }
  return counts;
}

namespace detail {

inline PairSample top_by_frequency(const SimilarityHierarchy& h, std::size_t i, std::size_t n,
                                   const std::map<std::uint32_t, std::uint64_t>& counts) {
  PairSample s;
  s.target = static_cast<std::uint32_t>(i);
  s.isolated = h.degree(i) == 0;
  struct Entry {
    std::uint32_t node;
    std::uint64_t count;
    double sim;
  };
  std::vector<Entry> entries;
  for (const auto& [node, count] : counts) entries.push_back({node, count, h.weight(i, node).value_or(0.0)});
  std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    if (a.count != b.count) return a.count > b.count;
    if (a.sim != b.sim) return a.sim > b.sim;
    return a.node < b.node;
  });
  if (entries.size() > n) entries.resize(n);
  double total = 0.0;
  for (const auto& e : entries) total += static_cast<double>(e.count);
  for (const auto& e : entries) {
    s.positives.push_back(e.node);
    s.weights.push_back(static_cast<double>(e.count) / total);
  }
  return s;
}

}  // namespace detail

/// Top-n nodes by visit frequency over k similarity-weighted walks of length l.
/// Ties: higher similarity to the target, then lower index. Weights are
/// frequencies normalized over the chosen positives.
inline PairSample high_order_sample(const SimilarityHierarchy& h, std::size_t i, std::size_t l, std::size_t k,
                                    std::size_t n, Rng& rng) {
  return detail::top_by_frequency(h, i, n, walk_visit_counts(h, i, l, k, rng));
}

/// Unnormalized second-order rate P_i^+(x_j) + sum_k P_i^+(x_k) P_k^+(x_j).
/// The map includes i itself (mass of two-step returns), so all rates sum to 2
/// whenever i has neighbors.
inline std::map<std::uint32_t, double> second_order_rate(const SimilarityHierarchy& h, std::size_t i) {
  std::map<std::uint32_t, double> rate;
  for (const auto& [j, p] : first_order_probabilities(h, i)) {
    rate[j] += p;
    for (const auto& [x, q] : first_order_probabilities(h, j)) rate[x] += p * q;
  }
  return rate;
}

/// Other batch members and their positives, minus the target and its own
/// positives, in batch order without duplicates, capped at n.
inline std::vector<std::uint32_t> in_batch_negatives(std::span<const PairSample> batch, std::size_t index,
                                                     std::size_t n) {
  if (n < 1) throw PreconditionError("negative count must be at least 1");
  if (batch.size() < 2) throw PreconditionError("in-batch negatives need a batch of at least 2");
  const auto& self = batch[index];
  std::unordered_set<std::uint32_t> seen(self.positives.begin(), self.positives.end());
  seen.insert(self.target);
  std::vector<std::uint32_t> out;
  auto take = [&](std::uint32_t x) {
    if (out.size() < n && seen.insert(x).second) out.push_back(x);
  };
  for (std::size_t b = 0; b < batch.size(); ++b) {
    if (b == index) continue;
    take(batch[b].target);
    for (auto p : batch[b].positives) take(p);
  }
  return out;
}

/// n draws (with replacement) proportional to hierarchy degree, never returning
/// the target or anything in `exclude`.
inline std::vector<std::uint32_t> degree_weighted_negatives(const SimilarityHierarchy& h, std::size_t target,
                                                            std::span<const std::uint32_t> exclude, std::size_t n,
                                                            Rng& rng) {
  if (n < 1) throw PreconditionError("negative count must be at least 1");
  std::vector<double> w(h.size());
  for (std::size_t x = 0; x < h.size(); ++x) w[x] = static_cast<double>(h.degree(x));
  w.at(target) = 0.0;
  for (auto x : exclude) w.at(x) = 0.0;
  std::vector<std::uint32_t> out;
  out.reserve(n);
  for (std::size_t d = 0; d < n; ++d) out.push_back(static_cast<std::uint32_t>(rng.weighted_index(w)));
  return out;
}

/// Negatives for batch[index] under either policy.
inline std::vector<std::uint32_t> sample_negatives(const SimilarityHierarchy& h, std::span<const PairSample> batch,
                                                   std::size_t index, NegativePolicy policy, std::size_t n, Rng& rng) {
  if (policy == NegativePolicy::InBatch) return in_batch_negatives(batch, index, n);
  const auto& self = batch[index];
  return degree_weighted_negatives(h, self.target, self.positives, n, rng);
}

namespace detail {
// Substream tags keep positive and negative draws for the same target independent.
inline constexpr std::uint64_t kPositiveStream = 1;
inline constexpr std::uint64_t kNegativeStream = 2;
}  // namespace detail

/// Positives for one target under the configured strategy, from the target's own
/// substreams (one per walk for high-order sampling).
inline PairSample sample_positives(const SimilarityHierarchy& h, std::size_t target, const SamplerConfig& cfg) {
  if (cfg.strategy == SamplingStrategy::FirstOrder) {
    auto rng = Rng::substream(cfg.seed, {detail::kPositiveStream, target});
    return first_order_sample(h, target, cfg.positives(), rng);
  }
  std::map<std::uint32_t, std::uint64_t> counts;
  for (std::size_t w = 0; w < cfg.walk_count; ++w) {
    auto rng = Rng::substream(cfg.seed, {detail::kPositiveStream, target, w});
    similarity_walk(h, target, cfg.walk_length, rng, [&](std::uint32_t v) {
      if (v != target) ++counts[v];
    });
  }
  return detail::top_by_frequency(h, target, cfg.positives(), counts);
}

/// Full pair records for `targets` (positives, then negatives per batch of
/// consecutive targets). Output order follows `targets`.
inline std::vector<PairSample> sample_pairs(const SimilarityHierarchy& h, const SamplerConfig& cfg,
                                            std::span<const std::uint32_t> targets,
                                            const ParallelFor& parallel = run_serial) {
  cfg.validate();
  std::vector<PairSample> out(targets.size());
  parallel(targets.size(), [&](std::size_t t) { out[t] = sample_positives(h, targets[t], cfg); });
  if (cfg.negatives == NegativePolicy::DegreeWeighted) {
    parallel(targets.size(), [&](std::size_t t) {
      auto rng = Rng::substream(cfg.seed, {detail::kNegativeStream, targets[t]});
      out[t].negatives = degree_weighted_negatives(h, targets[t], out[t].positives, cfg.neg_count, rng);
    });
  } else {
    if (cfg.batch_size < 2) throw PreconditionError("in-batch negatives need batch_size >= 2");
    const std::size_t batches = (targets.size() + cfg.batch_size - 1) / cfg.batch_size;
    for (std::size_t b = 0; b < batches; ++b) {
      const std::size_t begin = b * cfg.batch_size;
      const std::size_t end = std::min(targets.size(), begin + cfg.batch_size);
      std::span<const PairSample> batch(out.data() + begin, end - begin);
      if (batch.size() < 2) continue;  // a trailing singleton batch has nothing to contrast against
      std::vector<std::vector<std::uint32_t>> negs(batch.size());
      parallel(batch.size(), [&](std::size_t k) { negs[k] = in_batch_negatives(batch, k, cfg.neg_count); });
      for (std::size_t k = 0; k < batch.size(); ++k) out[begin + k].negatives = std::move(negs[k]);
    }
  }
  return out;
}

/// `{"t": id, "pos": [id,...], "w": [float,...], "neg": [id,...]}` per line.
inline std::string serialize_pairs(const SimilarityHierarchy& h, std::span<const PairSample> samples) {
  std::string out;
  for (const auto& s : samples) {
    nlohmann::ordered_json j;
    j["t"] = h.id(s.target);
    auto pos = nlohmann::ordered_json::array();
    for (auto p : s.positives) pos.push_back(h.id(p));
    j["pos"] = std::move(pos);
    j["w"] = s.weights;
    auto neg = nlohmann::ordered_json::array();
    for (auto x : s.negatives) neg.push_back(h.id(x));
    j["neg"] = std::move(neg);
    out += j.dump();
    out += '\n';
  }
  return out;
}

struct SamplerStats {
  std::optional<double> inter_pos_sim;
  std::optional<double> target_sim;
  std::optional<double> connected_ratio;
};

/// Quality of sampled positives restricted to the target's one-hop neighbors:
/// mean pairwise similarity among them, mean similarity to the target, and the
/// fraction of their pairs joined by a hierarchy edge. Per-target means are
/// averaged over the targets where each is defined.
inline SamplerStats sampler_stats(const SimilarityHierarchy& h, const PairScorer& scorer, const SamplerConfig& cfg,
                                  std::span<const std::uint32_t> targets, const ParallelFor& parallel = run_serial) {
  if (targets.empty()) throw PreconditionError("sampler_stats needs at least one target");
  cfg.validate();
  struct Row {
    std::optional<double> inter, target, connected;
  };
  std::vector<Row> rows(targets.size());
  parallel(targets.size(), [&](std::size_t t) {
    const auto i = targets[t];
    auto s = sample_positives(h, i, cfg);
    std::vector<std::uint32_t> firsts;
    for (auto p : s.positives) {
      if (h.connected(i, p)) firsts.push_back(p);
    }
    if (firsts.empty()) return;
    double ts = 0.0;
    for (auto p : firsts) ts += scorer(i, p);
    rows[t].target = ts / static_cast<double>(firsts.size());
    if (firsts.size() < 2) return;
    double inter = 0.0, linked = 0.0, pairs = 0.0;
    for (std::size_t a = 0; a < firsts.size(); ++a) {
      for (std::size_t b = a + 1; b < firsts.size(); ++b) {
        inter += scorer(firsts[a], firsts[b]);
        linked += h.connected(firsts[a], firsts[b]) ? 1.0 : 0.0;
        pairs += 1.0;
      }
    }
    rows[t].inter = inter / pairs;
    rows[t].connected = linked / pairs;
  });
  auto mean_of = [&](auto field) -> std::optional<double> {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& r : rows) {
      if (r.*field) {
        sum += *(r.*field);
        ++n;
      }
    }
    if (n == 0) return std::nullopt;
    return sum / static_cast<double>(n);
  };
  return {mean_of(&Row::inter), mean_of(&Row::target), mean_of(&Row::connected)};
}

}  // namespace hiersample
