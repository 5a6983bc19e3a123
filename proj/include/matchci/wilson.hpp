#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "matchci/dataset.hpp"
#include "matchci/estimators.hpp"
#include "matchci/variance.hpp"

namespace matchci {

struct IntervalResult {
  Metric metric = Metric::frr;
  std::string method;
  double point = 0.0;
  double lower = 0.0;
  double upper = 1.0;
  double alpha = 0.05;
  std::map<std::string, double> diagnostics;
};

// Wilson score interval on an effective sample size. At p_hat = 0 the lower
// bound is exactly 0 (and at p_hat = 1 the upper is exactly 1); that is the
// analytic value, returned directly instead of via the rounded difference.
IntervalResult wilson_core(double p_hat, double n_star, double alpha);

struct EffectiveSampleSize {
  double n_star = 0.0;
  bool floor_applied = false;
  bool cap_applied = false;
  double floor_value = 0.0;
  std::int64_t naive_pairs = 0;
};

// Dependence-adjusted effective sample size: p(1-p) / Var(estimate), floored
// at G (FRR) or floor(G/2) (FAR), capped above at the naive pair count.
// `scaled_variance` is Var of the sqrt(G)-scaled estimator.
EffectiveSampleSize effective_n(Metric metric, double estimate, double scaled_variance,
                                int g, std::int64_t naive_pairs);

enum class WilsonMode { adjusted, naive };

// Point estimate + Wilson interval for a dataset's aggregates. Adjusted mode
// uses the dependence-aware variance (plug-in when balanced, delta method
// otherwise); naive mode pretends comparisons are independent.
IntervalResult wilson_interval(Metric metric, const PairAggregates& agg, WilsonMode mode,
                               double alpha,
                               FrrVarianceMode frr_mode = FrrVarianceMode::delta_full);

// Internal comparison helper (acceptance checks only); not a recommended method.
IntervalResult wald_interval(double p_hat, double n, double alpha);

}  // namespace matchci
