#pragma once

#include <string>

#include "matchci/dataset.hpp"
#include "matchci/estimators.hpp"

namespace matchci {

enum class FrrVarianceMode { delta_full, delta_independent };

// Variance of the sqrt(G)-scaled estimator. `raw` keeps the unclamped value
// (the composite forms can go slightly negative on real data); callers that
// compare against closed forms want `raw`, interval construction wants
// `scaled_variance` (= max(raw, 0)).
struct VarianceEstimate {
  Metric target = Metric::frr;
  double scaled_variance = 0.0;
  double raw = 0.0;
  bool clamped = false;
  std::string estimator;
  // FAR components (or their unbalanced analogs); NaN for FRR targets.
  double var_y12 = 0.0;
  double cov_y12_y13 = 0.0;
};

// Balanced setting.
VarianceEstimate var_frr_plugin(const PairAggregates& agg);
double var_y12_plugin(const PairAggregates& agg);
double cov_y12_y13_plugin(const PairAggregates& agg);
VarianceEstimate var_far_plugin(const PairAggregates& agg);
VarianceEstimate var_far_jackknife(const PairAggregates& agg);

// Unbalanced setting (delta method over identity-level moments). Both reduce
// exactly to the balanced plug-ins when all instance counts are equal.
VarianceEstimate var_frr_unbalanced(const PairAggregates& agg, FrrVarianceMode mode);
VarianceEstimate var_far_unbalanced(const PairAggregates& agg);

// Dispatch on agg.balanced (adjusted-interval defaults: plug-in / delta_full).
VarianceEstimate variance_for(Metric metric, const PairAggregates& agg,
                              FrrVarianceMode frr_mode = FrrVarianceMode::delta_full);

}  // namespace matchci
