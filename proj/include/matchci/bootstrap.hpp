#pragma once

#include <cstdint>
#include <vector>

#include "matchci/dataset.hpp"
#include "matchci/estimators.hpp"
#include "matchci/rng.hpp"
#include "matchci/wilson.hpp"

namespace matchci {

enum class BootstrapScheme { subsets, two_level, vertex, double_or_nothing };

const char* scheme_name(BootstrapScheme s);

// One replicate's metric values. A metric is invalid when its denominator
// vanished for the drawn weights (the caller redraws).
struct ReplicateValue {
  double frr = 0.0;
  double far = 0.0;
  bool frr_valid = false;
  bool far_valid = false;
};

Eigen::VectorXd draw_multinomial_weights(int g, RngStream& rng);  // Multinomial(G; 1/G)
Eigen::VectorXd draw_don_weights(int g, RngStream& rng);          // iid {0, 2}

// Replicate evaluators. Weights enter at the identity level; cells are
// weighted by their comparison counts, so the balanced forms (plain means over
// reweighted cells) come out exactly when all instance counts are equal.
ReplicateValue subsets_replicate(const PairAggregates& agg, const Eigen::VectorXd& w);
ReplicateValue vertex_replicate(const PairAggregates& agg, const Eigen::VectorXd& w);
ReplicateValue don_replicate(const PairAggregates& agg, const Eigen::VectorXd& w);

// Two-level: subsets first stage, then each selected identity copy resamples
// its within-comparisons and its cross-comparison row with replacement
// (exact binomial draws over the stored outcome counts). `passthrough`
// disables the second stage (test hook; returns the original cell means).
ReplicateValue two_level_replicate(const PairAggregates& agg, const Eigen::VectorXd& w,
                                   RngStream& rng, bool passthrough = false);

struct BootstrapDistribution {
  Metric metric = Metric::frr;
  BootstrapScheme scheme = BootstrapScheme::subsets;
  std::vector<double> values;  // one per replicate, replicate index order
  std::uint64_t seed = 0;
  std::int64_t rejected_draws = 0;
};

// Runs b replicates; replicate i draws from stream (seed, i), so the result
// is identical for any thread count. Degenerate draws for the requested
// metric are redrawn (up to 1000 times per replicate, then a resampling
// error).
BootstrapDistribution bootstrap_distribution(const PairAggregates& agg,
                                             BootstrapScheme scheme, Metric metric, int b,
                                             std::uint64_t seed, int threads = 1);

// Percentile interval from order statistics max(floor(b*alpha/2), 1) and
// min(ceil(b*(1-alpha/2)), b), 1-based. `point` is left NaN; callers fill in
// the plug-in estimate.
IntervalResult percentile_interval(const BootstrapDistribution& dist, double alpha);

// Distribution + percentile interval + plug-in point estimate.
IntervalResult bootstrap_interval(const PairAggregates& agg, BootstrapScheme scheme,
                                  Metric metric, int b, std::uint64_t seed, double alpha,
                                  int threads = 1);

}  // namespace matchci
