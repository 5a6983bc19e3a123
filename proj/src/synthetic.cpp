#include "matchci/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "matchci/parallel.hpp"
#include "matchci/rng.hpp"

namespace matchci {

namespace {

void validate(const SyntheticConfig& config) {
  if (config.g < 2) throw PreconditionError("synthetic: need at least two identities");
  if (config.m < 2)
    throw PreconditionError("synthetic: need at least two instances per identity");
  if (config.dim < 1) throw PreconditionError("synthetic: dimension must be positive");
  if (!(config.beta_scale > 0.0))
    throw PreconditionError("synthetic: identity effect rate must be positive");
  if (!(config.noise_second_param >= 0.0))
    throw PreconditionError("synthetic: noise parameter must be nonnegative");
}

constexpr std::uint64_t kCalibrationTag = 0xCA11B0A7u;

}  // namespace

MatchDataset generate_synthetic(const SyntheticConfig& config) {
  validate(config);
  const double sd = config.noise_interpretation == NoiseParam::variance
                        ? std::sqrt(config.noise_second_param)
                        : config.noise_second_param;

  MatchDataset ds;
  ds.m.assign(static_cast<std::size_t>(config.g), config.m);
  ds.offset.resize(static_cast<std::size_t>(config.g) + 1, 0);
  for (int i = 0; i < config.g; ++i) {
    ds.identity_labels.push_back("id" + std::to_string(i + 1));
    ds.offset[static_cast<std::size_t>(i) + 1] = ds.offset[static_cast<std::size_t>(i)] +
                                                 config.m;
    for (int k = 0; k < config.m; ++k) ds.inst_identity.push_back(i);
  }

  const int n = ds.n_instances();
  ds.embeddings.resize(n, config.dim);
  RngStream rng(config.seed, 0);
  Eigen::VectorXd beta(config.dim);
  for (int i = 0; i < config.g; ++i) {
    for (int d = 0; d < config.dim; ++d)
      beta[d] = -std::log1p(-rng.uniform()) / config.beta_scale;
    for (int k = 0; k < config.m; ++k) {
      const int row = ds.offset[static_cast<std::size_t>(i)] + k;
      for (int d = 0; d < config.dim; ++d)
        ds.embeddings(row, d) = beta[d] + sd * rng.normal();
      const double nrm = ds.embeddings.row(row).norm();
      if (nrm > 0.0) ds.embeddings.row(row) /= nrm;
    }
  }
  ds.materialize_scores();
  return ds;
}

Calibration calibrate_threshold(const SyntheticConfig& config, Metric metric,
                                double target, int calib_g, int calib_m) {
  if (!(target >= 0.0 && target <= 1.0))
    throw PreconditionError("calibrate_threshold: target rate must be in [0, 1]");
  SyntheticConfig big = config;
  big.g = calib_g;
  big.m = calib_m;
  big.seed = derive_seed(config.seed, kCalibrationTag);
  const MatchDataset ds = generate_synthetic(big);

  std::vector<double> family;  // genuine distances for FRR, impostor for FAR
  const int n = ds.n_instances();
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b) {
      const bool genuine = ds.inst_identity[static_cast<std::size_t>(a)] ==
                           ds.inst_identity[static_cast<std::size_t>(b)];
      if (genuine == (metric == Metric::frr)) family.push_back(ds.scores(a, b));
    }
  std::sort(family.begin(), family.end());
  const std::int64_t count = static_cast<std::int64_t>(family.size());
  const std::int64_t j = std::llround(target * static_cast<double>(count));

  Calibration out;
  out.metric = metric;
  out.target = target;
  const auto above_max = [&] {
    return std::nextafter(family.back(), std::numeric_limits<double>::infinity());
  };
  std::int64_t achieved_count = 0;
  if (metric == Metric::far) {
    // false accepts are impostor scores strictly below the threshold
    out.threshold = j == count ? above_max() : family[static_cast<std::size_t>(j)];
    achieved_count = std::lower_bound(family.begin(), family.end(), out.threshold) -
                     family.begin();
  } else {
    // false rejects are genuine scores at or above the threshold
    out.threshold = j == 0 ? above_max() : family[static_cast<std::size_t>(count - j)];
    achieved_count = family.end() -
                     std::lower_bound(family.begin(), family.end(), out.threshold);
  }
  out.achieved = static_cast<double>(achieved_count) / static_cast<double>(count);
  out.exact = out.achieved == target;
  return out;
}

IntervalResult interval_by_method(const std::string& method, const PairAggregates& agg,
                                  Metric metric, double alpha, int b, std::uint64_t seed,
                                  int threads) {
  if (method == "wilson") return wilson_interval(metric, agg, WilsonMode::adjusted, alpha);
  if (method == "naive-wilson")
    return wilson_interval(metric, agg, WilsonMode::naive, alpha);
  if (method == "subsets")
    return bootstrap_interval(agg, BootstrapScheme::subsets, metric, b, seed, alpha,
                              threads);
  if (method == "two-level")
    return bootstrap_interval(agg, BootstrapScheme::two_level, metric, b, seed, alpha,
                              threads);
  if (method == "vertex")
    return bootstrap_interval(agg, BootstrapScheme::vertex, metric, b, seed, alpha,
                              threads);
  if (method == "don")
    return bootstrap_interval(agg, BootstrapScheme::double_or_nothing, metric, b, seed,
                              alpha, threads);
  throw ParseError("unknown interval method: " + method);
}

CoverageReport run_coverage_experiment(const SyntheticConfig& config, double threshold,
                                       Metric metric, double truth,
                                       const std::vector<std::string>& methods,
                                       double alpha, std::int64_t replications,
                                       int bootstrap_b, int threads) {
  validate(config);
  if (replications < 1)
    throw PreconditionError("run_coverage_experiment: need at least one replication");
  if (methods.empty())
    throw PreconditionError("run_coverage_experiment: no methods requested");
  if (!(alpha > 0.0 && alpha < 1.0))
    throw PreconditionError("run_coverage_experiment: alpha must be in (0, 1)");

  struct Outcome {
    double width = 0.0;
    char hit = 0;
    char failed = 0;
  };
  const std::size_t n_methods = methods.size();
  std::vector<Outcome> slots(static_cast<std::size_t>(replications) * n_methods);

  parallel_for(replications, threads, [&](std::int64_t r) {
    SyntheticConfig local = config;
    local.seed = derive_seed(config.seed, static_cast<std::uint64_t>(r));
    const MatchDataset ds = generate_synthetic(local);
    const PairAggregates agg = aggregate_pairs(ds, threshold);
    for (std::size_t mi = 0; mi < n_methods; ++mi) {
      Outcome& out = slots[static_cast<std::size_t>(r) * n_methods + mi];
      try {
        const IntervalResult iv =
            interval_by_method(methods[mi], agg, metric, alpha, bootstrap_b,
                               derive_seed(local.seed, mi + 1));
        out.hit = iv.lower <= truth && truth <= iv.upper;
        out.width = iv.upper - iv.lower;
      } catch (const PreconditionError&) {
        out.failed = 1;
      } catch (const ResamplingError&) {
        out.failed = 1;
      }
    }
  });

  CoverageReport report;
  report.metric = metric;
  report.truth = truth;
  report.threshold = threshold;
  report.alpha = alpha;
  report.replications = replications;
  report.bootstrap_b = bootstrap_b;
  report.seed = config.seed;
  for (std::size_t mi = 0; mi < n_methods; ++mi) {
    MethodCoverage mc;
    mc.method = methods[mi];
    mc.replications = replications;
    double width_sum = 0.0;
    for (std::int64_t r = 0; r < replications; ++r) {
      const Outcome& out = slots[static_cast<std::size_t>(r) * n_methods + mi];
      if (out.failed) {
        ++mc.failures;
        continue;
      }
      mc.hits += out.hit;
      width_sum += out.width;
    }
    const std::int64_t successes = replications - mc.failures;
    if (successes > 0) {
      mc.coverage = static_cast<double>(mc.hits) / static_cast<double>(successes);
      mc.mean_width = width_sum / static_cast<double>(successes);
      const IntervalResult ci =
          wilson_core(mc.coverage, static_cast<double>(successes), 0.05);
      mc.coverage_lower = ci.lower;
      mc.coverage_upper = ci.upper;
    } else {
      mc.mean_width = std::numeric_limits<double>::quiet_NaN();
    }
    report.methods.push_back(std::move(mc));
  }
  return report;
}

}  // namespace matchci
