#include "matchci/wilson.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "matchci/normal.hpp"

namespace matchci {

IntervalResult wilson_core(double p_hat, double n_star, double alpha) {
  if (!(p_hat >= 0.0 && p_hat <= 1.0))
    throw PreconditionError("wilson_core: p_hat must lie in [0,1]");
  if (!(n_star > 0.0)) throw PreconditionError("wilson_core: n_star must be positive");
  if (!(alpha > 0.0 && alpha < 1.0))
    throw PreconditionError("wilson_core: alpha must lie in (0,1)");
  const double z = two_sided_z(alpha);
  const double z2 = z * z;
  const double denom = n_star + z2;
  const double center = (p_hat * n_star + 0.5 * z2) / denom;
  const double half =
      z * std::sqrt(n_star) / denom * std::sqrt(p_hat * (1.0 - p_hat) + z2 / (4.0 * n_star));
  IntervalResult out;
  out.method = "wilson";
  out.point = p_hat;
  out.alpha = alpha;
  out.lower = p_hat == 0.0 ? 0.0 : std::max(0.0, center - half);
  out.upper = p_hat == 1.0 ? 1.0 : std::min(1.0, center + half);
  out.diagnostics["n_star"] = n_star;
  out.diagnostics["z"] = z;
  return out;
}

EffectiveSampleSize effective_n(Metric metric, double estimate, double scaled_variance,
                                int g, std::int64_t naive_pairs) {
  if (g < 1) throw PreconditionError("effective_n: g must be positive");
  if (scaled_variance < 0.0)
    throw PreconditionError("effective_n: variance must be nonnegative");
  EffectiveSampleSize ess;
  ess.floor_value = metric == Metric::frr ? static_cast<double>(g)
                                          : static_cast<double>(g / 2);
  ess.naive_pairs = naive_pairs;
  const double pq = estimate * (1.0 - estimate);
  const double var_est = scaled_variance / g;
  double ratio;
  if (pq <= 0.0) {
    ratio = 0.0;  // degenerate estimate: the floor carries the interval
  } else if (var_est <= 0.0) {
    ratio = std::numeric_limits<double>::infinity();
  } else {
    ratio = pq / var_est;
  }
  ess.n_star = ratio;
  if (ess.n_star < ess.floor_value) {
    ess.n_star = ess.floor_value;
    ess.floor_applied = true;
  }
  if (naive_pairs > 0 && ess.n_star > static_cast<double>(naive_pairs)) {
    ess.n_star = static_cast<double>(naive_pairs);
    ess.cap_applied = true;
  }
  return ess;
}

IntervalResult wilson_interval(Metric metric, const PairAggregates& agg, WilsonMode mode,
                               double alpha, FrrVarianceMode frr_mode) {
  const ErrorEstimate est =
      metric == Metric::frr ? estimate_frr(agg) : estimate_far(agg);
  IntervalResult out;
  if (mode == WilsonMode::naive) {
    out = wilson_core(est.value, static_cast<double>(est.n_effective_naive), alpha);
    out.method = "naive-wilson";
  } else {
    const VarianceEstimate var = variance_for(metric, agg, frr_mode);
    const EffectiveSampleSize ess =
        effective_n(metric, est.value, var.scaled_variance, agg.g(), est.n_effective_naive);
    out = wilson_core(est.value, ess.n_star, alpha);
    out.method = "wilson";
    out.diagnostics["scaled_variance"] = var.scaled_variance;
    out.diagnostics["variance_raw"] = var.raw;
    out.diagnostics["variance_clamped"] = var.clamped ? 1.0 : 0.0;
    out.diagnostics["floor_applied"] = ess.floor_applied ? 1.0 : 0.0;
    out.diagnostics["cap_applied"] = ess.cap_applied ? 1.0 : 0.0;
    out.diagnostics["n_star_floor"] = ess.floor_value;
    if (metric == Metric::far && std::isfinite(var.var_y12)) {
      out.diagnostics["var_y12"] = var.var_y12;
      out.diagnostics["cov_y12_y13"] = var.cov_y12_y13;
    }
  }
  out.metric = metric;
  out.point = est.value;
  out.diagnostics["naive_pairs"] = static_cast<double>(est.n_effective_naive);
  return out;
}

IntervalResult wald_interval(double p_hat, double n, double alpha) {
  const double z = two_sided_z(alpha);
  const double half = z * std::sqrt(p_hat * (1.0 - p_hat) / n);
  IntervalResult out;
  out.method = "wald";
  out.point = p_hat;
  out.alpha = alpha;
  out.lower = std::max(0.0, p_hat - half);
  out.upper = std::min(1.0, p_hat + half);
  out.diagnostics["n"] = n;
  return out;
}

}  // namespace matchci
