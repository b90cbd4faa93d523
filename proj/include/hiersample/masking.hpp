#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "hiersample/augment.hpp"
#include "hiersample/errors.hpp"
#include "hiersample/graph.hpp"
#include "hiersample/random.hpp"

namespace hiersample {

using ClassDistribution = std::vector<double>;

/// Per-node class distribution over the position-0 node attribute vocabulary.
/// Must be a pure function of (graph, masked set, parameters).
class NodePredictor {
 public:
  virtual ~NodePredictor() = default;
  virtual std::size_t classes() const = 0;
  virtual std::vector<ClassDistribution> predict(const AttributedGraph& g, std::span<const NodeIndex> masked) const = 0;
};

/// Untrained sum-aggregation message-passing network with seeded Gaussian
/// parameters. Masked nodes get the MASK embedding (code == vocabulary size)
/// at every attribute position.
class ReferencePredictor final : public NodePredictor {
 public:
  struct Options {
    std::size_t layers = 3;
    std::size_t width = 32;
    std::uint64_t seed = 0;
    double logit_scale = 3.0;  // multiplies the head weights and bias
  };

  ReferencePredictor(std::vector<AttrCode> node_vocab, Options opts)
      : vocab_(std::move(node_vocab)), opts_(opts) {
    if (vocab_.empty() || vocab_[0] < 1) throw PreconditionError("predictor needs a nonempty node vocabulary");
    if (opts_.width == 0) throw PreconditionError("predictor width must be positive");
    auto rng = Rng::substream(opts_.seed, {0x9e7ULL});
    const std::size_t w = opts_.width;
    for (auto size : vocab_) {
      std::vector<double> table(static_cast<std::size_t>(size + 1) * w);
      for (auto& x : table) x = rng.normal();
      embeddings_.push_back(std::move(table));
    }
    const double scale = std::sqrt(2.0 / static_cast<double>(w));
    for (std::size_t l = 0; l < opts_.layers; ++l) {
      Affine a{std::vector<double>(w * w), std::vector<double>(w), w, w};
      for (auto& x : a.weight) x = rng.normal() * scale;
      for (auto& x : a.bias) x = 0.1 * rng.normal();
      layers_.push_back(std::move(a));
    }
    const auto c = static_cast<std::size_t>(vocab_[0]);
    head_ = Affine{std::vector<double>(c * w), std::vector<double>(c), c, w};
    for (auto& x : head_.weight) x = rng.normal() * scale * opts_.logit_scale;
    for (auto& x : head_.bias) x = 0.1 * rng.normal() * opts_.logit_scale;
  }

  std::size_t classes() const override { return static_cast<std::size_t>(vocab_[0]); }

  std::vector<ClassDistribution> predict(const AttributedGraph& g, std::span<const NodeIndex> masked) const override {
    const std::size_t n = g.node_count();
    const std::size_t w = opts_.width;
    if (n > 0 && g.node_arity() > vocab_.size()) throw PreconditionError("graph has more attribute positions than the predictor");
    std::vector<bool> is_masked(n, false);
    for (auto v : masked) {
      if (v >= n) throw PreconditionError("masked node out of range");
      is_masked[v] = true;
    }
    std::vector<double> h(n * w, 0.0);
    for (NodeIndex v = 0; v < n; ++v) {
      auto attrs = g.node_attrs(v);
      for (std::size_t p = 0; p < attrs.size(); ++p) {
        AttrCode code = is_masked[v] ? vocab_[p] : std::min(attrs[p], vocab_[p]);
        const double* e = embeddings_[p].data() + static_cast<std::size_t>(code) * w;
        for (std::size_t k = 0; k < w; ++k) h[v * w + k] += e[k];
      }
    }
    std::vector<double> agg(n * w), next(n * w);
    for (const auto& layer : layers_) {
      agg = h;
      for (NodeIndex v = 0; v < n; ++v) {
        for (const auto& nb : g.neighbors(v)) {
          for (std::size_t k = 0; k < w; ++k) agg[v * w + k] += h[nb.node * w + k];
        }
      }
      for (NodeIndex v = 0; v < n; ++v) {
        layer.apply(&agg[v * w], &next[v * w]);
        for (std::size_t k = 0; k < w; ++k) next[v * w + k] = std::max(0.0, next[v * w + k]);
      }
      h.swap(next);
    }
    std::vector<ClassDistribution> out(n, ClassDistribution(head_.rows));
    for (NodeIndex v = 0; v < n; ++v) {
      auto& y = out[v];
      head_.apply(&h[v * w], y.data());
      const double top = *std::max_element(y.begin(), y.end());
      double z = 0.0;
      for (auto& x : y) z += (x = std::exp(x - top));
      for (auto& x : y) x /= z;
    }
    return out;
  }

 private:
  struct Affine {
    std::vector<double> weight;  // rows x cols, row-major
    std::vector<double> bias;
    std::size_t rows;
    std::size_t cols;

    void apply(const double* in, double* out) const {
      for (std::size_t r = 0; r < rows; ++r) {
        double acc = bias[r];
        const double* row = weight.data() + r * cols;
        for (std::size_t c = 0; c < cols; ++c) acc += row[c] * in[c];
        out[r] = acc;
      }
    }
  };

  std::vector<AttrCode> vocab_;
  Options opts_;
  std::vector<std::vector<double>> embeddings_;
  std::vector<Affine> layers_;
  Affine head_{};
};

/// -sum_k target_k * ln(predicted_k); terms with target_k = 0 contribute nothing.
inline double cross_entropy(std::span<const double> target, std::span<const double> predicted) {
  double ce = 0.0;
  for (std::size_t k = 0; k < target.size(); ++k) {
    if (target[k] == 0.0) continue;
    if (predicted[k] <= 0.0) return std::numeric_limits<double>::infinity();
    ce -= target[k] * std::log(predicted[k]);
  }
  return ce;
}

// max(0, 1 - CE(y_prev, y_cur)).
inline double pscore_from(std::span<const double> y_prev, std::span<const double> y_cur) {
  return std::max(0.0, 1.0 - cross_entropy(y_prev, y_cur));
}

/// Perturbation score of node v: how little its prediction moved between the
/// previous and the current mask set.
inline double pscore(NodeIndex v, const NodePredictor& m, const AttributedGraph& g,
                     std::span<const NodeIndex> s_cur, std::span<const NodeIndex> s_prev) {
  if (std::find(s_cur.begin(), s_cur.end(), v) != s_cur.end()) throw PreconditionError("pscore: node is already masked");
  auto prev = m.predict(g, s_prev);
  auto cur = m.predict(g, s_cur);
  return pscore_from(prev.at(v), cur.at(v));
}

struct MaskPlan {
  std::string graph_id;
  std::vector<std::vector<NodeIndex>> steps;
  std::vector<std::map<NodeIndex, double>> scores;  // per step; empty for the uniform first step
  std::vector<NodeIndex> masked;                    // union of all steps, sorted

  std::size_t total() const noexcept { return masked.size(); }
};

/// Step sizes for a mask ratio: total = ceil(ratio * n), alpha = ceil(total / T),
/// the last non-empty step is truncated and any later steps are empty.
inline std::vector<std::size_t> mask_schedule(std::size_t n, double ratio, std::size_t steps) {
  if (steps < 1) throw PreconditionError("mask schedule needs at least one step");
  if (!(ratio >= 0.0 && ratio <= 1.0)) throw PreconditionError("mask ratio must lie in [0, 1]");
  const std::size_t total = ceil_count(ratio, n);
  const std::size_t alpha = (total + steps - 1) / steps;
  std::vector<std::size_t> sizes;
  std::size_t left = total;
  for (std::size_t t = 0; t < steps; ++t) {
    sizes.push_back(std::min(alpha, left));
    left -= sizes.back();
  }
  return sizes;
}

namespace detail {

// Successive draws without replacement, each proportional to score; a zero
// total mass falls back to uniform over what is left.
inline std::vector<NodeIndex> draw_by_score(std::vector<NodeIndex> pool, std::vector<double> weight, std::size_t count,
                                            Rng& rng) {
  std::vector<NodeIndex> out;
  for (std::size_t d = 0; d < count; ++d) {
    double total = 0.0;
    for (double x : weight) total += x;
    std::size_t k = total > 0.0 ? rng.weighted_index(weight) : static_cast<std::size_t>(rng.below(pool.size()));
    out.push_back(pool[k]);
    pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(k));
    weight.erase(weight.begin() + static_cast<std::ptrdiff_t>(k));
  }
  return out;
}

}  // namespace detail

/// Multi-step adaptive masking. Step 1 is uniform; each later step scores the
/// unmasked nodes with PScore against the mask sets before and after the
/// previous step and draws proportionally to the scores.
inline MaskPlan adaptive_mask(const AttributedGraph& g, const NodePredictor& m, std::span<const std::size_t> step_sizes,
                              Rng& rng) {
  const std::size_t n = g.node_count();
  std::size_t total = 0;
  for (auto s : step_sizes) total += s;
  if (step_sizes.empty()) throw PreconditionError("adaptive_mask needs at least one step");
  if (total > n) throw PreconditionError("mask plan asks for more nodes than the graph has");

  MaskPlan plan;
  plan.graph_id = g.id();
  std::vector<NodeIndex> current, previous;
  std::vector<bool> in_current(n, false);
  for (std::size_t t = 0; t < step_sizes.size(); ++t) {
    std::vector<NodeIndex> chosen;
    std::map<NodeIndex, double> scores;
    if (t == 0) {
      auto picks = sample_without_replacement(n, step_sizes[0], rng);
      chosen.assign(picks.begin(), picks.end());
    } else if (step_sizes[t] > 0) {
      auto y_prev = m.predict(g, previous);
      auto y_cur = m.predict(g, current);
      std::vector<NodeIndex> pool;
      std::vector<double> weight;
      for (NodeIndex v = 0; v < n; ++v) {
        if (in_current[v]) continue;
        double s = pscore_from(y_prev[v], y_cur[v]);
        scores[v] = s;
        pool.push_back(v);
        weight.push_back(s);
      }
      chosen = detail::draw_by_score(std::move(pool), std::move(weight), step_sizes[t], rng);
    }
    previous = current;
    for (auto v : chosen) {
      in_current[v] = true;
      current.push_back(v);
    }
    std::sort(current.begin(), current.end());
    plan.steps.push_back(std::move(chosen));
    plan.scores.push_back(std::move(scores));
  }
  plan.masked = current;
  return plan;
}

inline MaskPlan adaptive_mask(const AttributedGraph& g, const NodePredictor& m, std::size_t steps, std::size_t alpha,
                              Rng& rng) {
  if (steps < 1) throw PreconditionError("adaptive_mask needs T >= 1");
  if (steps * alpha > g.node_count()) throw PreconditionError("T * alpha exceeds the node count");
  std::vector<std::size_t> sizes(steps, alpha);
  return adaptive_mask(g, m, sizes, rng);
}

// Uniform masking; identical to a one-step adaptive plan on the same stream.
inline std::vector<NodeIndex> uniform_mask(const AttributedGraph& g, std::size_t count, Rng& rng) {
  auto picks = sample_without_replacement(g.node_count(), count, rng);
  std::vector<NodeIndex> out(picks.begin(), picks.end());
  std::sort(out.begin(), out.end());
  return out;
}

struct MaskDispersion {
  std::optional<double> mean;  // absent when no masked node reaches another
  std::size_t excluded = 0;    // masked nodes with no other masked node in reach
};

/// Mean over masked nodes of the hop distance to the nearest other masked node.
inline MaskDispersion avg_min_masked_distance(const AttributedGraph& g, std::span<const NodeIndex> masked) {
  if (masked.size() < 2) throw PreconditionError("avg_min_masked_distance needs at least two masked nodes");
  std::vector<bool> is_masked(g.node_count(), false);
  for (auto v : masked) is_masked.at(v) = true;
  MaskDispersion out;
  double sum = 0.0;
  std::size_t counted = 0;
  for (auto v : masked) {
    auto dist = bfs_distances(g, v);
    HopDistance best = kUnreachable;
    for (NodeIndex u = 0; u < g.node_count(); ++u) {
      if (u != v && is_masked[u]) best = std::min(best, dist[u]);
    }
    if (best == kUnreachable) {
      ++out.excluded;
      continue;
    }
    sum += best;
    ++counted;
  }
  if (counted > 0) out.mean = sum / static_cast<double>(counted);
  return out;
}

/// `{"id": str, "steps": [[int,...],...], "metric": float|null}`.
inline std::string mask_plan_record(const AttributedGraph& g, const MaskPlan& plan) {
  nlohmann::ordered_json j;
  j["id"] = plan.graph_id;
  j["steps"] = plan.steps;
  if (plan.masked.size() >= 2) {
    auto d = avg_min_masked_distance(g, plan.masked);
    j["metric"] = d.mean ? nlohmann::ordered_json(*d.mean) : nlohmann::ordered_json(nullptr);
  } else {
    j["metric"] = nullptr;
  }
  return j.dump();
}

}  // namespace hiersample
