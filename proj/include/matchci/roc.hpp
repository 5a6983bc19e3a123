#pragma once

#include <cstdint>
#include <limits>
#include <string>

#include <Eigen/Dense>

#include "matchci/bootstrap.hpp"
#include "matchci/dataset.hpp"
#include "matchci/wilson.hpp"

namespace matchci {

// Pooled error tradeoff curve over the grid of observed scores plus -inf/+inf
// sentinels. A comparison is accepted when its dissimilarity score falls
// below the threshold, so FAR(t) is nondecreasing in t and FRR(t) is
// nonincreasing; FAR(-inf) = 0 and FAR(+inf) = 1.
struct EmpiricalRoc {
  Eigen::VectorXd thresholds;  // ascending, sentinels at both ends
  Eigen::VectorXd far_at;      // nondecreasing, in [0,1]
  Eigen::VectorXd frr_at;      // nonincreasing, in [0,1]

  int size() const { return static_cast<int>(thresholds.size()); }
};

// Requires at least one genuine and one impostor comparison.
EmpiricalRoc empirical_roc(const MatchDataset& ds);

// Both curves are right-continuous steps between grid points; these evaluate
// them at arbitrary t.
double roc_far_at(const EmpiricalRoc& roc, double t);
double roc_frr_at(const EmpiricalRoc& roc, double t);

// Largest grid threshold whose empirical FAR does not exceed target (the
// conservative side of the step-function inverse). target in [0,1]; the
// sentinels guarantee a result.
double threshold_for_far(const EmpiricalRoc& roc, double target);

struct RocPointInterval {
  double target_far = 0.0;
  double threshold_used = 0.0;  // threshold attaining the target on the sample
  IntervalResult interval;
  std::string method;  // parametric_nested | bootstrap_vertical
  double alpha_far = std::numeric_limits<double>::quiet_NaN();
};

// Nested construction: a 1-alpha_far adjusted interval for FAR at the target
// threshold is inverted back to a threshold band, and the returned interval
// is the envelope of the adjusted FRR intervals at the band edges and at the
// point threshold itself (so it always contains the single-threshold FRR
// interval). alpha_far defaults to alpha.
RocPointInterval roc_interval_parametric(const MatchDataset& ds, double target_far,
                                         double alpha, double alpha_far);
RocPointInterval roc_interval_parametric(const MatchDataset& ds, double target_far,
                                         double alpha);

// Vertical averaging: every replicate reweights both curves with one set of
// identity weights, re-inverts its own FAR curve at target_far, and reads off
// FRR there; the interval is the percentile interval of those values.
// Supports subsets, vertex, and double-or-nothing weights (two-level
// resampling has no reweighted-curve form).
RocPointInterval roc_interval_bootstrap(const MatchDataset& ds, double target_far,
                                        double alpha, BootstrapScheme scheme, int b,
                                        std::uint64_t seed, int threads = 1);

}  // namespace matchci
