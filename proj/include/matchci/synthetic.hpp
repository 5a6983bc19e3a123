#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "matchci/bootstrap.hpp"
#include "matchci/dataset.hpp"
#include "matchci/wilson.hpp"

namespace matchci {

enum class NoiseParam { variance, stddev };

// Balanced synthetic embedding model: each identity gets a nonnegative
// identity effect with iid Exponential(beta_scale) components, each instance
// adds iid centered Gaussian noise per component, and rows are normalized to
// unit Euclidean norm before scores (distances) are taken.
struct SyntheticConfig {
  int g = 50;
  int m = 5;
  int dim = 128;
  double beta_scale = 1.0;          // exponential rate of the identity effect
  double noise_second_param = 5.0;  // variance by default, see interpretation
  NoiseParam noise_interpretation = NoiseParam::variance;
  std::uint64_t seed = 0;
};

MatchDataset generate_synthetic(const SyntheticConfig& config);

// Threshold whose empirical error rate on a large calibration sample is the
// nearest achievable value to the target. The achieved rate doubles as the
// ground truth when scoring interval coverage.
struct Calibration {
  Metric metric = Metric::far;
  double target = 0.0;
  double threshold = 0.0;
  double achieved = 0.0;  // empirical rate at the threshold on the sample
  bool exact = false;     // achieved == target
};

Calibration calibrate_threshold(const SyntheticConfig& config, Metric metric,
                                double target, int calib_g = 200, int calib_m = 10);

// One interval method by tag: wilson | naive-wilson | subsets | two-level |
// vertex | don. Bootstrap tags run b replicates from the given seed.
IntervalResult interval_by_method(const std::string& method, const PairAggregates& agg,
                                  Metric metric, double alpha, int b, std::uint64_t seed,
                                  int threads = 1);

struct MethodCoverage {
  std::string method;
  std::int64_t replications = 0;  // attempted
  std::int64_t hits = 0;
  std::int64_t failures = 0;  // prerequisite failures, not counted as misses
  double coverage = 0.0;      // hits / (replications - failures)
  double coverage_lower = 0.0;  // 95% naive Wilson on the hit proportion
  double coverage_upper = 1.0;
  double mean_width = 0.0;
};

struct CoverageReport {
  Metric metric = Metric::far;
  double truth = 0.0;
  double threshold = 0.0;
  double alpha = 0.05;
  std::int64_t replications = 0;
  int bootstrap_b = 0;
  std::uint64_t seed = 0;
  std::vector<MethodCoverage> methods;
};

// Monte Carlo coverage: per replication r, a fresh dataset is generated from
// a child seed of (config.seed, r) and every method's interval is checked
// against the truth. Identical for any thread count.
CoverageReport run_coverage_experiment(const SyntheticConfig& config, double threshold,
                                       Metric metric, double truth,
                                       const std::vector<std::string>& methods,
                                       double alpha, std::int64_t replications,
                                       int bootstrap_b = 1000, int threads = 1);

}  // namespace matchci
