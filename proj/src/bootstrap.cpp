#include "matchci/bootstrap.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "matchci/parallel.hpp"

namespace matchci {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr int kMaxRedraws = 1000;

// Shared precomputation for replicate evaluation over one aggregate matrix.
struct Context {
  int g = 0;
  Eigen::VectorXd mt;        // m_i (m_i - 1)
  Eigen::VectorXd diag_x;    // mt_i * y_ii (0 when m_i < 2)
  Eigen::MatrixXd cross_a;   // m_i m_j y_ij, zero diagonal
  Eigen::MatrixXd cross_b;   // m_i m_j, zero diagonal
  Eigen::VectorXd row_a;     // row sums of cross_a
  Eigen::VectorXd row_b;     // row sums of cross_b
  Eigen::VectorXd swap_w;    // m_i^2 (vertex same-identity cross weight)
  double far_hat = 0.0;
  // two-level outcome store
  bool has_store = false;
  Eigen::VectorXd n_within, k_within, n_cross, k_cross;

  explicit Context(const PairAggregates& agg) {
    g = agg.g();
    mt = agg.m_tilde;
    diag_x.resize(g);
    cross_a.setZero(g, g);
    cross_b.setZero(g, g);
    swap_w.resize(g);
    for (int i = 0; i < g; ++i) {
      diag_x(i) = mt(i) > 0.0 ? mt(i) * agg.y_bar(i, i) : 0.0;
      swap_w(i) = agg.m(i) * agg.m(i);
      for (int j = 0; j < g; ++j) {
        if (j == i) continue;
        cross_b(i, j) = agg.m(i) * agg.m(j);
        cross_a(i, j) = cross_b(i, j) * agg.y_bar(i, j);
      }
    }
    row_a = cross_a.rowwise().sum();
    row_b = cross_b.rowwise().sum();
    if (g >= 2) far_hat = estimate_far(agg).value;
    if (agg.has_outcome_store) {
      has_store = true;
      n_within.resize(g);
      k_within.resize(g);
      n_cross = row_b;
      k_cross.resize(g);
      for (int i = 0; i < g; ++i) {
        n_within(i) = mt(i) / 2.0;
        k_within(i) = static_cast<double>(agg.err(i, i));
        double kc = 0.0;
        for (int j = 0; j < g; ++j)
          if (j != i) kc += static_cast<double>(agg.err(i, j));
        k_cross(i) = kc;
      }
    }
  }

  ReplicateValue subsets(const Eigen::VectorXd& w) const {
    ReplicateValue r;
    const double frr_den = w.dot(mt);
    if (frr_den > 0.0) {
      r.frr = w.dot(diag_x) / frr_den;
      r.frr_valid = true;
    }
    const double far_den = w.dot(row_b);
    if (far_den > 0.0) {
      r.far = w.dot(row_a) / far_den;
      r.far_valid = true;
    }
    return r;
  }

  ReplicateValue vertex(const Eigen::VectorXd& w) const {
    ReplicateValue r = subsets(w);  // FRR path is the subsets one
    double swap_total = 0.0;
    for (int i = 0; i < g; ++i) swap_total += w(i) * (w(i) - 1.0) * swap_w(i);
    const double cross_num = w.dot(cross_a * w);
    const double cross_den = w.dot(cross_b * w);
    const double den = swap_total + cross_den;
    r.far_valid = den > 0.0;
    r.far = r.far_valid ? (swap_total * far_hat + cross_num) / den : kNaN;
    return r;
  }

  ReplicateValue don(const Eigen::VectorXd& w) const {
    ReplicateValue r;
    const double frr_den = w.dot(mt);
    if (frr_den > 0.0) {
      r.frr = w.dot(diag_x) / frr_den;
      r.frr_valid = true;
    }
    const double far_den = w.dot(cross_b * w);
    if (far_den > 0.0) {
      r.far = w.dot(cross_a * w) / far_den;
      r.far_valid = true;
    }
    return r;
  }

  ReplicateValue two_level(const Eigen::VectorXd& w, RngStream& rng,
                           bool passthrough) const {
    if (!has_store)
      throw PreconditionError("two-level bootstrap requires aggregates with an outcome store");
    ReplicateValue r;
    double frr_num = 0.0, frr_den = 0.0, far_num = 0.0, far_den = 0.0;
    for (int i = 0; i < g; ++i) {
      const int wi = static_cast<int>(w(i));
      for (int c = 0; c < wi; ++c) {
        if (n_within(i) > 0.0) {
          const double k =
              passthrough ? k_within(i)
                          : static_cast<double>(rng.binomial(
                                static_cast<std::int64_t>(n_within(i)),
                                k_within(i) / n_within(i)));
          frr_num += mt(i) * (k / n_within(i));
          frr_den += mt(i);
        }
        if (n_cross(i) > 0.0) {
          const double k =
              passthrough ? k_cross(i)
                          : static_cast<double>(rng.binomial(
                                static_cast<std::int64_t>(n_cross(i)),
                                k_cross(i) / n_cross(i)));
          far_num += k;
          far_den += n_cross(i);
        }
      }
    }
    if (frr_den > 0.0) {
      r.frr = frr_num / frr_den;
      r.frr_valid = true;
    }
    if (far_den > 0.0) {
      r.far = far_num / far_den;
      r.far_valid = true;
    }
    return r;
  }
};

double run_replicate(const Context& ctx, BootstrapScheme scheme, Metric metric,
                     std::uint64_t seed, std::int64_t replicate, std::int64_t* rejected) {
  RngStream rng(seed, static_cast<std::uint64_t>(replicate));
  for (int attempt = 0; attempt < kMaxRedraws; ++attempt) {
    Eigen::VectorXd w = scheme == BootstrapScheme::double_or_nothing
                            ? draw_don_weights(ctx.g, rng)
                            : draw_multinomial_weights(ctx.g, rng);
    ReplicateValue v;
    switch (scheme) {
      case BootstrapScheme::subsets: v = ctx.subsets(w); break;
      case BootstrapScheme::vertex: v = ctx.vertex(w); break;
      case BootstrapScheme::double_or_nothing: v = ctx.don(w); break;
      case BootstrapScheme::two_level: v = ctx.two_level(w, rng, false); break;
    }
    if (metric == Metric::frr ? v.frr_valid : v.far_valid) {
      if (rejected) *rejected += attempt;
      return metric == Metric::frr ? v.frr : v.far;
    }
  }
  throw ResamplingError("replicate " + std::to_string(replicate) +
                        ": no valid weight draw in " + std::to_string(kMaxRedraws) +
                        " attempts");
}

}  // namespace

const char* scheme_name(BootstrapScheme s) {
  switch (s) {
    case BootstrapScheme::subsets: return "subsets";
    case BootstrapScheme::two_level: return "two-level";
    case BootstrapScheme::vertex: return "vertex";
    case BootstrapScheme::double_or_nothing: return "don";
  }
  return "?";
}

Eigen::VectorXd draw_multinomial_weights(int g, RngStream& rng) {
  Eigen::VectorXd w = Eigen::VectorXd::Zero(g);
  for (int k = 0; k < g; ++k) w(static_cast<int>(rng.uniform_int(g))) += 1.0;
  return w;
}

Eigen::VectorXd draw_don_weights(int g, RngStream& rng) {
  Eigen::VectorXd w(g);
  for (int i = 0; i < g; ++i) w(i) = 2.0 * static_cast<double>(rng.uniform_int(2));
  return w;
}

ReplicateValue subsets_replicate(const PairAggregates& agg, const Eigen::VectorXd& w) {
  return Context(agg).subsets(w);
}

ReplicateValue vertex_replicate(const PairAggregates& agg, const Eigen::VectorXd& w) {
  return Context(agg).vertex(w);
}

ReplicateValue don_replicate(const PairAggregates& agg, const Eigen::VectorXd& w) {
  return Context(agg).don(w);
}

ReplicateValue two_level_replicate(const PairAggregates& agg, const Eigen::VectorXd& w,
                                   RngStream& rng, bool passthrough) {
  return Context(agg).two_level(w, rng, passthrough);
}

BootstrapDistribution bootstrap_distribution(const PairAggregates& agg,
                                             BootstrapScheme scheme, Metric metric, int b,
                                             std::uint64_t seed, int threads) {
  if (b < 1) throw PreconditionError("bootstrap_distribution: b must be positive");
  if (metric == Metric::frr && !(agg.m_tilde.sum() > 0.0))
    throw PreconditionError("FRR bootstrap requires an identity with two instances");
  if (metric == Metric::far && agg.g() < 2)
    throw PreconditionError("FAR bootstrap requires at least two identities");
  const Context ctx(agg);
  if (scheme == BootstrapScheme::two_level && !ctx.has_store)
    throw PreconditionError("two-level bootstrap requires aggregates with an outcome store");
  BootstrapDistribution dist;
  dist.metric = metric;
  dist.scheme = scheme;
  dist.seed = seed;
  dist.values.resize(b);
  std::vector<std::int64_t> rejected(static_cast<std::size_t>(b), 0);
  parallel_for(b, threads, [&](std::int64_t i) {
    dist.values[i] = run_replicate(ctx, scheme, metric, seed, i, &rejected[i]);
  });
  for (const auto r : rejected) dist.rejected_draws += r;
  return dist;
}

IntervalResult percentile_interval(const BootstrapDistribution& dist, double alpha) {
  const std::int64_t b = static_cast<std::int64_t>(dist.values.size());
  if (b < 100)
    throw PreconditionError("percentile_interval: needs at least 100 replicates");
  if (!(alpha > 0.0 && alpha < 1.0))
    throw PreconditionError("percentile_interval: alpha must lie in (0,1)");
  std::vector<double> sorted = dist.values;
  std::sort(sorted.begin(), sorted.end());
  const std::int64_t raw_lo = static_cast<std::int64_t>(std::floor(b * alpha / 2.0));
  std::int64_t lo = std::max<std::int64_t>(raw_lo, 1);
  std::int64_t hi = std::min<std::int64_t>(
      static_cast<std::int64_t>(std::ceil(b * (1.0 - alpha / 2.0))), b);
  IntervalResult out;
  out.metric = dist.metric;
  out.method = scheme_name(dist.scheme);
  out.alpha = alpha;
  out.point = kNaN;
  out.lower = sorted[static_cast<std::size_t>(lo - 1)];
  out.upper = sorted[static_cast<std::size_t>(hi - 1)];
  out.diagnostics["b"] = static_cast<double>(b);
  out.diagnostics["lower_index"] = static_cast<double>(lo);
  out.diagnostics["upper_index"] = static_cast<double>(hi);
  out.diagnostics["lower_index_clamped"] = raw_lo < 1 ? 1.0 : 0.0;
  out.diagnostics["rejected_draws"] = static_cast<double>(dist.rejected_draws);
  out.diagnostics["seed"] = static_cast<double>(dist.seed);
  return out;
}

IntervalResult bootstrap_interval(const PairAggregates& agg, BootstrapScheme scheme,
                                  Metric metric, int b, std::uint64_t seed, double alpha,
                                  int threads) {
  const auto dist = bootstrap_distribution(agg, scheme, metric, b, seed, threads);
  IntervalResult out = percentile_interval(dist, alpha);
  out.point = (metric == Metric::frr ? estimate_frr(agg) : estimate_far(agg)).value;
  return out;
}

}  // namespace matchci
