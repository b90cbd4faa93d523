#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "hiersample/errors.hpp"
#include "hiersample/parallel.hpp"

namespace hiersample {

using Vector = std::vector<double>;

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

// ---------------------------------------------------------------------------
// Contrastive loss and gradients

/// Raw vectors w_i with cached unit views z_i = w_i / |w_i|.
class EmbeddingSet {
 public:
  explicit EmbeddingSet(std::vector<Vector> w) : w_(std::move(w)) {
    if (w_.empty()) return;
    const std::size_t k = w_[0].size();
    for (const auto& v : w_) {
      if (v.size() != k) throw PreconditionError("embeddings must share one dimension");
      const double n = norm2(v);
      if (!(n > 0.0)) throw PreconditionError("embedding with zero norm");
      norms_.push_back(n);
      Vector z(v);
      for (auto& x : z) x /= n;
      z_.push_back(std::move(z));
    }
  }

  std::size_t size() const noexcept { return w_.size(); }
  std::size_t dim() const noexcept { return w_.empty() ? 0 : w_[0].size(); }
  const Vector& raw(std::size_t i) const { return w_.at(i); }
  const Vector& z(std::size_t i) const { return z_.at(i); }
  double norm(std::size_t i) const { return norms_.at(i); }

  EmbeddingSet with_raw(std::size_t i, Vector w) const {
    auto copy = w_;
    copy.at(i) = std::move(w);
    return EmbeddingSet(std::move(copy));
  }

 private:
  std::vector<Vector> w_;
  std::vector<Vector> z_;
  std::vector<double> norms_;
};

struct ContrastConfig {
  double temperature = 0.07;
  std::size_t negatives = 255;  // N

  void validate() const {
    if (!(temperature > 0.0)) throw PreconditionError("temperature must be positive");
    if (negatives < 1) throw PreconditionError("negative count must be at least 1");
  }
};

struct PositiveMass {
  std::size_t id;
  double p;
};
using PositiveDistribution = std::vector<PositiveMass>;

namespace detail {

inline void check_contrast_inputs(const EmbeddingSet& emb, const PositiveDistribution& pos,
                                  std::span<const std::size_t> pool, const ContrastConfig& cfg) {
  cfg.validate();
  if (pos.empty()) throw PreconditionError("empty positive distribution");
  if (pool.empty()) throw PreconditionError("empty negative pool");
  for (const auto& m : pos) {
    if (m.id >= emb.size()) throw PreconditionError("positive id has no embedding");
  }
  for (auto x : pool) {
    if (x >= emb.size()) throw PreconditionError("negative pool id has no embedding");
  }
}

// sum over the pool of exp(z^T z_x / t)
inline double pool_mass(const Vector& z, const EmbeddingSet& emb, std::span<const std::size_t> pool, double t) {
  double s = 0.0;
  for (auto x : pool) s += std::exp(dot(z, emb.z(x)) / t);
  return s;
}

// (I - z z^T) v / |w|
inline Vector project_tangent(const Vector& z, Vector v, double w_norm) {
  const double along = dot(z, v);
  for (std::size_t k = 0; k < v.size(); ++k) v[k] = (v[k] - along * z[k]) / w_norm;
  return v;
}

}  // namespace detail

/// Expected InfoNCE loss of an anchor with unit vector z_i: positives drawn from
/// `pos`, N negatives drawn uniformly from `pool`.
inline double infonce_expected_loss(const Vector& z_i, const PositiveDistribution& pos, const EmbeddingSet& emb,
                                    std::span<const std::size_t> pool, const ContrastConfig& cfg) {
  detail::check_contrast_inputs(emb, pos, pool, cfg);
  const double t = cfg.temperature;
  const double c = static_cast<double>(cfg.negatives) / static_cast<double>(pool.size());
  const double s = detail::pool_mass(z_i, emb, pool, t);
  double loss = 0.0;
  for (const auto& m : pos) {
    if (m.p == 0.0) continue;
    const double a = dot(z_i, emb.z(m.id)) / t;
    // -log(e^a / (e^a + cS)) = log1p(cS e^-a)
    loss += m.p * std::log1p(c * s * std::exp(-a));
  }
  return loss;
}

inline double infonce_expected_loss(const EmbeddingSet& emb, std::size_t i, const PositiveDistribution& pos,
                                    std::span<const std::size_t> pool, const ContrastConfig& cfg) {
  return infonce_expected_loss(emb.z(i), pos, emb, pool, cfg);
}

/// d E[L_j] / d w_i for i != j. `positive_path` flows through x_i as a positive
/// of j (Q excludes x_i from the pool sum); `pool_path` flows through x_i as a
/// pool member under the other positives.
struct CrossGradient {
  Vector positive_path;
  Vector pool_path;
  Vector total;
};

/// d E[L_i] / d w_i split into the pull toward positives and the push from the pool.
struct SelfGradient {
  Vector positive_part;
  Vector pool_part;
  Vector total;
};

struct GradientPair {
  CrossGradient cross;
  SelfGradient self;
};

inline CrossGradient cross_gradient(std::size_t i, std::size_t j, const EmbeddingSet& emb,
                                    const PositiveDistribution& pos_j, std::span<const std::size_t> pool,
                                    const ContrastConfig& cfg) {
  detail::check_contrast_inputs(emb, pos_j, pool, cfg);
  if (i == j) throw PreconditionError("cross_gradient needs i != j");
  const double t = cfg.temperature;
  const double c = static_cast<double>(cfg.negatives) / static_cast<double>(pool.size());
  const auto& zi = emb.z(i);
  const auto& zj = emb.z(j);
  const double e_ji = std::exp(dot(zj, zi) / t);
  const double s_j = detail::pool_mass(zj, emb, pool, t);
  const bool i_in_pool = std::find(pool.begin(), pool.end(), i) != pool.end();
  double p_ji = 0.0;
  double pool_weight = 0.0;  // sum over positives p != i of P_j(p) M^-(x_j, x_p, x_i)
  for (const auto& m : pos_j) {
    const double d = std::exp(dot(zj, emb.z(m.id)) / t) + c * s_j;
    if (m.id == i) {
      p_ji += m.p;
    } else if (i_in_pool) {
      pool_weight += m.p * c * e_ji / d;
    }
  }
  const double d_i = e_ji + c * s_j;
  const double q = c * (s_j - (i_in_pool ? e_ji : 0.0)) / d_i;
  const double wn = emb.norm(i);
  auto tangent = detail::project_tangent(zi, zj, 1.0);  // z_j - (z_i^T z_j) z_i
  CrossGradient g;
  g.positive_path.resize(zi.size());
  g.pool_path.resize(zi.size());
  g.total.resize(zi.size());
  for (std::size_t k = 0; k < zi.size(); ++k) {
    g.positive_path[k] = -p_ji / (t * wn) * tangent[k] * q;
    g.pool_path[k] = pool_weight / (t * wn) * tangent[k];
    g.total[k] = g.positive_path[k] + g.pool_path[k];
  }
  return g;
}

inline SelfGradient self_gradient(std::size_t i, const EmbeddingSet& emb, const PositiveDistribution& pos_i,
                                  std::span<const std::size_t> pool, const ContrastConfig& cfg) {
  detail::check_contrast_inputs(emb, pos_i, pool, cfg);
  const double t = cfg.temperature;
  const double c = static_cast<double>(cfg.negatives) / static_cast<double>(pool.size());
  const auto& zi = emb.z(i);
  const std::size_t dim = zi.size();
  const double s_i = detail::pool_mass(zi, emb, pool, t);
  Vector pull(dim, 0.0), push(dim, 0.0);
  double pool_coeff = 0.0;  // sum_p P_i(p) c / D_p
  for (const auto& m : pos_i) {
    if (m.p == 0.0) continue;
    const auto& zp = emb.z(m.id);
    const double d = std::exp(dot(zi, zp) / t) + c * s_i;
    const double share = c * s_i / d;
    for (std::size_t k = 0; k < dim; ++k) pull[k] += m.p * share * zp[k];
    pool_coeff += m.p * c / d;
  }
  for (auto x : pool) {
    const auto& zx = emb.z(x);
    const double mx = pool_coeff * std::exp(dot(zi, zx) / t);  // M(x_i, x)
    for (std::size_t k = 0; k < dim; ++k) push[k] += mx * zx[k];
  }
  const double wn = emb.norm(i);
  SelfGradient g;
  g.positive_part = detail::project_tangent(zi, pull, wn);
  g.pool_part = detail::project_tangent(zi, push, wn);
  g.total.resize(dim);
  for (std::size_t k = 0; k < dim; ++k) {
    g.positive_part[k] *= -1.0 / t;
    g.pool_part[k] *= 1.0 / t;
    g.total[k] = g.positive_part[k] + g.pool_part[k];
  }
  return g;
}

/// Both partial derivatives of interest for the pair (i, j). `positives[x]` is
/// P_x^+ for every instance x.
inline GradientPair analytic_gradient(std::size_t i, std::size_t j, const EmbeddingSet& emb,
                                      std::span<const PositiveDistribution> positives,
                                      std::span<const std::size_t> pool, const ContrastConfig& cfg) {
  if (i >= positives.size() || j >= positives.size()) throw PreconditionError("missing positive distribution");
  return {cross_gradient(i, j, emb, positives[j], pool, cfg), self_gradient(i, emb, positives[i], pool, cfg)};
}

/// Central differences of E[L_anchor] with respect to the raw vector w_i.
inline Vector finite_difference_gradient(std::size_t i, std::size_t anchor, const EmbeddingSet& emb,
                                         const PositiveDistribution& pos_anchor, std::span<const std::size_t> pool,
                                         const ContrastConfig& cfg, double step = 1e-5) {
  Vector g(emb.dim());
  for (std::size_t k = 0; k < emb.dim(); ++k) {
    Vector up = emb.raw(i), down = emb.raw(i);
    up[k] += step;
    down[k] -= step;
    const double lu = infonce_expected_loss(emb.with_raw(i, up), anchor, pos_anchor, pool, cfg);
    const double ld = infonce_expected_loss(emb.with_raw(i, down), anchor, pos_anchor, pool, cfg);
    g[k] = (lu - ld) / (2.0 * step);
  }
  return g;
}

inline double relative_error(std::span<const double> analytic, std::span<const double> reference) {
  double diff = 0.0;
  for (std::size_t k = 0; k < analytic.size(); ++k) diff += (analytic[k] - reference[k]) * (analytic[k] - reference[k]);
  const double scale = std::max(norm2(reference), std::numeric_limits<double>::min());
  return std::sqrt(diff) / scale;
}

struct TangentIdentities {
  double norm;       // |z_j - (z_i^T z_j) z_i|
  double alignment;  // (z_j' - (z_i^T z_j') z_i)^T (z_j - (z_i^T z_j) z_i)
};

inline TangentIdentities tangent_identities(std::span<const double> zi, std::span<const double> zj,
                                            std::span<const double> zj2) {
  const double ij = dot(zi, zj);
  return {std::sqrt(std::max(0.0, 1.0 - ij * ij)), dot(zj2, zj) - dot(zj2, zi) * ij};
}

// ---------------------------------------------------------------------------
// Similarity densities, posterior and sampling bias

/// Normal(mu, sigma) restricted to [0, 1] and renormalized.
class TruncatedNormal {
 public:
  TruncatedNormal(double mu, double sigma) : mu_(mu), sigma_(sigma) {
    if (!(sigma > 0.0) || !std::isfinite(mu)) throw PreconditionError("truncated normal needs finite mu and sigma > 0");
    mass_ = phi_cdf((1.0 - mu_) / sigma_) - phi_cdf(-mu_ / sigma_);
    if (!(mass_ > 0.0)) throw PreconditionError("truncated normal has no mass on [0, 1]");
    log_norm_ = std::log(sigma_ * mass_) + 0.5 * std::log(2.0 * std::numbers::pi);
  }

  double mu() const noexcept { return mu_; }
  double sigma() const noexcept { return sigma_; }

  double log_pdf(double x) const {
    const double u = (x - mu_) / sigma_;
    return -0.5 * u * u - log_norm_;
  }
  double pdf(double x) const { return (x < 0.0 || x > 1.0) ? 0.0 : std::exp(log_pdf(x)); }
  double cdf(double x) const {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    return (phi_cdf((x - mu_) / sigma_) - phi_cdf(-mu_ / sigma_)) / mass_;
  }

 private:
  static double phi_cdf(double u) { return 0.5 * std::erfc(-u / std::numbers::sqrt2); }

  double mu_;
  double sigma_;
  double mass_;
  double log_norm_;
};

struct DensityModel {
  TruncatedNormal positive;
  TruncatedNormal negative;
  double n_positive;  // |G^gt+|
  double n_negative;  // |G^gt-|

  DensityModel(double mu_pos, double sigma_pos, double mu_neg, double sigma_neg, double n_pos, double n_neg)
      : positive(mu_pos, sigma_pos), negative(mu_neg, sigma_neg), n_positive(n_pos), n_negative(n_neg) {
    if (!(mu_neg < mu_pos)) throw PreconditionError("density model needs mu- < mu+");
    if (!(n_pos > 0.0) || n_neg < 0.0) throw PreconditionError("density model needs |G+| > 0 and |G-| >= 0");
  }
};

inline constexpr double kQuadratureTolerance = 1e-13;
// Caps bisection when the integrand is so small that the relative target is
// unreachable in double precision (thresholds close to 1).
inline constexpr unsigned kQuadratureMaxDepth = 10;

/// Adaptive Gauss-Kronrod (61-point) over [a, b].
template <typename F>
double integrate(F&& f, double a, double b, double* error = nullptr) {
  if (!(b > a)) return 0.0;
  double err = 0.0;
  const double v =
      boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, kQuadratureMaxDepth, kQuadratureTolerance,
                                                                    &err);
  if (error) *error = err;
  return v;
}

/// f+(x) / (f+(x) + f-(x)), evaluated from the log-density difference.
inline double posterior_positive(double x, const DensityModel& dm) {
  if (!(x >= 0.0 && x <= 1.0)) throw PreconditionError("posterior_positive: x must lie in [0, 1]");
  return 1.0 / (1.0 + std::exp(dm.negative.log_pdf(x) - dm.positive.log_pdf(x)));
}

struct MonotoneInterval {
  int case_label;  // 1: equal spreads, 2: sigma+ < sigma-, 3: sigma+ > sigma-
  double lo;
  double hi;
  bool lo_closed;
  bool hi_closed;

  bool contains(double x) const {
    return (lo_closed ? x >= lo : x > lo) && (hi_closed ? x <= hi : x < hi);
  }
};

/// Interval of [0, 1] on which the posterior is non-decreasing.
inline MonotoneInterval monotone_interval(const DensityModel& dm) {
  const double mp = dm.positive.mu(), mn = dm.negative.mu();
  const double vp = dm.positive.sigma() * dm.positive.sigma();
  const double vn = dm.negative.sigma() * dm.negative.sigma();
  if (vp == vn) return {1, 0.0, 1.0, true, true};
  if (vp < vn) {
    const double b = (vn * mp - vp * mn) / (vn - vp);
    return {2, 0.0, std::clamp(b, 0.0, 1.0), true, false};
  }
  const double b = (vp * mn - vn * mp) / (vp - vn);
  return {3, std::clamp(b, 0.0, 1.0), 1.0, false, true};
}

namespace detail {

// integral over [tau, 1] of x f(x)
inline double upper_moment(const TruncatedNormal& f, double tau) {
  return integrate([&](double x) { return x * f.pdf(x); }, tau, 1.0);
}

}  // namespace detail

// Total similarity mass above tau: |G+| int x f+ + |G-| int x f-.
inline double totsim(double tau, const DensityModel& dm) {
  return dm.n_positive * detail::upper_moment(dm.positive, tau) +
         dm.n_negative * detail::upper_moment(dm.negative, tau);
}

/// Root of |G+| tau = totsim(tau) on (0, 1); above it every sampled true positive
/// is over-weighted relative to the ground-truth rate 1/|G+|.
inline double tau3(const DensityModel& dm) {
  double lo = 0.0, hi = 1.0;
  while (hi - lo > 1e-12) {
    const double mid = 0.5 * (lo + hi);
    if (dm.n_positive * mid - totsim(mid, dm) < 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

struct GapRisk {
  double tau;
  double gap;       // gap_gt + gap_sim
  double gap_gt;    // F+(tau) - (1 - F+(tau))
  double gap_sim;   // |G+| int_tau^1 x f+ / totsim
  double risk;      // |G-| int_tau^1 x f- / totsim
  double totsim;
  double bias_direct;  // sum of |P+ - P_gt+| evaluated with the absolute value kept
};

/// Sampling bias with the absolute value kept inside the integral; valid for any tau.
inline double bias_direct(double tau, const DensityModel& dm) {
  const double ts = totsim(tau, dm);
  const double inv_n = 1.0 / dm.n_positive;
  const double below = dm.positive.cdf(tau);
  const double kink = std::clamp(ts * inv_n, tau, 1.0);
  auto dev = [&](double x) { return std::abs(x / ts - inv_n) * dm.positive.pdf(x); };
  const double above = dm.n_positive * (integrate(dev, tau, kink) + integrate(dev, kink, 1.0));
  const double false_pos = dm.n_negative * detail::upper_moment(dm.negative, tau) / ts;
  return below + above + false_pos;
}

namespace detail {

inline GapRisk gap_risk_admissible(double tau, double t3, const DensityModel& dm) {
  if (!(tau > t3 && tau < 1.0)) {
    std::ostringstream msg;
    msg.precision(12);
    msg << "gap_risk: tau = " << tau << " is outside the admissible range (" << t3 << ", 1)";
    throw PreconditionError(msg.str());
  }
  GapRisk r{};
  r.tau = tau;
  const double ip = detail::upper_moment(dm.positive, tau);
  const double in = detail::upper_moment(dm.negative, tau);
  r.totsim = dm.n_positive * ip + dm.n_negative * in;
  const double f_below = dm.positive.cdf(tau);
  r.gap_gt = f_below - (1.0 - f_below);
  r.gap_sim = dm.n_positive * ip / r.totsim;
  r.gap = r.gap_gt + r.gap_sim;
  r.risk = dm.n_negative * in / r.totsim;
  r.bias_direct = bias_direct(tau, dm);
  return r;
}

}  // namespace detail

/// gap and risk at threshold tau; tau must lie in (tau3, 1).
inline GapRisk gap_risk(double tau, const DensityModel& dm) { return detail::gap_risk_admissible(tau, tau3(dm), dm); }

/// `count` thresholds evenly spaced strictly inside (tau3, 1).
inline std::vector<double> admissible_grid(const DensityModel& dm, std::size_t count) {
  const double t3 = tau3(dm);
  std::vector<double> out;
  for (std::size_t k = 0; k < count; ++k) {
    out.push_back(t3 + (1.0 - t3) * static_cast<double>(k + 1) / static_cast<double>(count + 1));
  }
  return out;
}

inline std::vector<GapRisk> gap_risk_grid(const DensityModel& dm, std::span<const double> taus,
                                          const ParallelFor& parallel = run_serial) {
  std::vector<GapRisk> out(taus.size());
  const double t3 = tau3(dm);
  parallel(taus.size(), [&](std::size_t k) { out[k] = detail::gap_risk_admissible(taus[k], t3, dm); });
  return out;
}

inline std::string gap_risk_csv(std::span<const GapRisk> rows) {
  std::ostringstream os;
  os.precision(17);
  os << "tau,gap,gap_gt,gap_sim,risk,totsim,bias_direct\n";
  for (const auto& r : rows) {
    os << r.tau << ',' << r.gap << ',' << r.gap_gt << ',' << r.gap_sim << ',' << r.risk << ',' << r.totsim << ','
       << r.bias_direct << '\n';
  }
  return os.str();
}

inline std::string posterior_csv(const DensityModel& dm, std::size_t points) {
  if (points < 2) throw PreconditionError("posterior grid needs at least 2 points");
  const auto iv = monotone_interval(dm);
  std::ostringstream os;
  os.precision(17);
  os << "x,posterior,in_monotone_interval\n";
  for (std::size_t k = 0; k < points; ++k) {
    const double x = static_cast<double>(k) / static_cast<double>(points - 1);
    os << x << ',' << posterior_positive(x, dm) << ',' << (iv.contains(x) ? 1 : 0) << '\n';
  }
  return os.str();
}

}  // namespace hiersample
