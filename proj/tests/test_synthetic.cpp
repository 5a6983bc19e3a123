#include "doctest.h"

#include <cmath>
#include <vector>

#include "matchci/estimators.hpp"
#include "matchci/synthetic.hpp"

using namespace matchci;

namespace {
SyntheticConfig small_config() {
  SyntheticConfig config;
  config.g = 8;
  config.m = 3;
  config.dim = 16;
  config.seed = 77;
  return config;
}
}  // namespace

TEST_CASE("synthetic generator shape and determinism") {
  const SyntheticConfig config = small_config();
  const MatchDataset ds = generate_synthetic(config);
  ds.validate();
  CHECK(ds.g() == 8);
  CHECK(ds.n_instances() == 24);
  CHECK(ds.balanced());
  CHECK(ds.has_embeddings());
  CHECK(ds.has_scores());
  for (int row = 0; row < ds.n_instances(); ++row)
    CHECK(ds.embeddings.row(row).norm() == doctest::Approx(1.0).epsilon(1e-12));
  for (int a = 0; a < ds.n_instances(); ++a)
    for (int b = a + 1; b < ds.n_instances(); ++b) {
      CHECK(ds.scores(a, b) >= 0.0);  // distances of unit vectors
      CHECK(ds.scores(a, b) <= 2.0);
      CHECK(ds.scores(a, b) == ds.scores(b, a));
    }

  const MatchDataset again = generate_synthetic(config);
  CHECK((again.scores.array() == ds.scores.array() ||
         (again.scores.array().isNaN() && ds.scores.array().isNaN()))
            .all());

  SyntheticConfig other = config;
  other.seed = 78;
  const MatchDataset different = generate_synthetic(other);
  CHECK_FALSE((different.scores.array() == ds.scores.array()).all());
}

TEST_CASE("synthetic noise interpretation") {
  SyntheticConfig var_config = small_config();
  var_config.noise_second_param = 4.0;
  var_config.noise_interpretation = NoiseParam::variance;
  SyntheticConfig sd_config = small_config();
  sd_config.noise_second_param = 2.0;
  sd_config.noise_interpretation = NoiseParam::stddev;
  const MatchDataset a = generate_synthetic(var_config);
  const MatchDataset b = generate_synthetic(sd_config);
  CHECK(a.embeddings == b.embeddings);  // sqrt(4) = 2: same draws, same scale
}

TEST_CASE("synthetic zero-noise limit") {
  SyntheticConfig config = small_config();
  config.noise_second_param = 0.0;
  const MatchDataset ds = generate_synthetic(config);
  // instances of one identity share the raw embedding, so genuine distance is 0
  for (int a = 0; a < ds.n_instances(); ++a)
    for (int b = a + 1; b < ds.n_instances(); ++b) {
      if (ds.inst_identity[static_cast<std::size_t>(a)] ==
          ds.inst_identity[static_cast<std::size_t>(b)])
        CHECK(ds.scores(a, b) == 0.0);
      else
        CHECK(ds.scores(a, b) > 0.0);
    }
  const PairAggregates agg = aggregate_pairs(ds, 1e-9);
  CHECK(estimate_frr(agg).value == 0.0);  // no genuine errors at any t > 0
}

TEST_CASE("synthetic generator validates its config") {
  SyntheticConfig config = small_config();
  config.g = 1;
  CHECK_THROWS_AS((void)generate_synthetic(config), PreconditionError);
  config = small_config();
  config.m = 1;
  CHECK_THROWS_AS((void)generate_synthetic(config), PreconditionError);
  config = small_config();
  config.dim = 0;
  CHECK_THROWS_AS((void)generate_synthetic(config), PreconditionError);
  config = small_config();
  config.beta_scale = 0.0;
  CHECK_THROWS_AS((void)generate_synthetic(config), PreconditionError);
  config = small_config();
  config.noise_second_param = -1.0;
  CHECK_THROWS_AS((void)generate_synthetic(config), PreconditionError);
}

TEST_CASE("threshold calibration") {
  SyntheticConfig config;
  config.seed = 11;

  SUBCASE("boundary targets clear the whole family") {
    const Calibration all = calibrate_threshold(config, Metric::far, 1.0, 40, 4);
    CHECK(all.achieved == 1.0);
    CHECK(all.exact);
    const Calibration none = calibrate_threshold(config, Metric::frr, 0.0, 40, 4);
    CHECK(none.achieved == 0.0);
    CHECK(none.exact);
    // both thresholds sit above the maximum score of their family
    CHECK(all.threshold > none.threshold * 0.0);  // finite
  }

  SUBCASE("far target hits the empirical quantile exactly") {
    const Calibration cal = calibrate_threshold(config, Metric::far, 1e-2);
    // 200 identities x 10 instances: impostor pair count is divisible by 100
    CHECK(cal.achieved == 1e-2);
    CHECK(cal.exact);
    CHECK(cal.threshold > 0.0);
  }

  SUBCASE("larger far target, larger threshold") {
    const double t1 = calibrate_threshold(config, Metric::far, 0.01, 60, 5).threshold;
    const double t2 = calibrate_threshold(config, Metric::far, 0.05, 60, 5).threshold;
    const double t3 = calibrate_threshold(config, Metric::far, 0.20, 60, 5).threshold;
    CHECK(t1 < t2);
    CHECK(t2 < t3);
  }

  SUBCASE("larger frr target, smaller threshold") {
    const double t1 = calibrate_threshold(config, Metric::frr, 0.01, 60, 5).threshold;
    const double t2 = calibrate_threshold(config, Metric::frr, 0.10, 60, 5).threshold;
    CHECK(t2 < t1);
  }

  SUBCASE("achieved rate is reproduced by the estimators") {
    const Calibration cal = calibrate_threshold(config, Metric::far, 0.05, 50, 4);
    SyntheticConfig big = config;
    big.g = 50;
    big.m = 4;
    big.seed = derive_seed(config.seed, 0xCA11B0A7u);
    const PairAggregates agg = aggregate_pairs(generate_synthetic(big), cal.threshold);
    CHECK(estimate_far(agg).value == doctest::Approx(cal.achieved).epsilon(1e-12));
  }

  CHECK_THROWS_AS((void)calibrate_threshold(config, Metric::far, 1.5), PreconditionError);
  CHECK_THROWS_AS((void)calibrate_threshold(config, Metric::far, -0.1),
                  PreconditionError);
}

TEST_CASE("interval method dispatch") {
  SyntheticConfig config = small_config();
  const MatchDataset ds = generate_synthetic(config);
  const Calibration cal = calibrate_threshold(config, Metric::far, 0.1, 30, 4);
  const PairAggregates agg = aggregate_pairs(ds, cal.threshold);

  for (const char* tag : {"wilson", "naive-wilson", "subsets", "two-level", "vertex",
                          "don"}) {
    const IntervalResult iv = interval_by_method(tag, agg, Metric::far, 0.05, 200, 5);
    CHECK(iv.method == tag);
    CHECK(iv.lower <= iv.upper);
  }
  CHECK_THROWS_AS((void)interval_by_method("wald", agg, Metric::far, 0.05, 200, 5),
                  ParseError);
}

TEST_CASE("disjoint genuine comparisons make the adjustment a no-op") {
  // with two instances per identity there is one genuine pair per identity,
  // so the plug-in variance equals p(1-p)/G and N* equals the pair count
  SyntheticConfig config;
  config.g = 40;
  config.m = 2;
  config.dim = 32;
  config.seed = 5;
  const double t = calibrate_threshold(config, Metric::frr, 0.1).threshold;
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    SyntheticConfig local = config;
    local.seed = seed;
    const PairAggregates agg = aggregate_pairs(generate_synthetic(local), t);
    const IntervalResult adjusted =
        wilson_interval(Metric::frr, agg, WilsonMode::adjusted, 0.05);
    const IntervalResult naive =
        wilson_interval(Metric::frr, agg, WilsonMode::naive, 0.05);
    CHECK(adjusted.diagnostics.at("n_star") ==
          doctest::Approx(naive.diagnostics.at("n_star")).epsilon(1e-9));
    CHECK(adjusted.lower == doctest::Approx(naive.lower).epsilon(1e-9));
    CHECK(adjusted.upper == doctest::Approx(naive.upper).epsilon(1e-9));
  }
}

TEST_CASE("coverage experiment") {
  SyntheticConfig config;
  config.g = 20;
  config.m = 2;
  config.dim = 16;
  config.seed = 404;
  const Calibration cal = calibrate_threshold(config, Metric::frr, 0.1, 100, 6);

  SUBCASE("deterministic across worker counts") {
    const std::vector<std::string> methods{"wilson", "subsets", "don"};
    const CoverageReport one = run_coverage_experiment(config, cal.threshold, Metric::frr,
                                                       cal.achieved, methods, 0.05, 24,
                                                       120, 1);
    const CoverageReport four = run_coverage_experiment(config, cal.threshold,
                                                        Metric::frr, cal.achieved,
                                                        methods, 0.05, 24, 120, 4);
    REQUIRE(one.methods.size() == methods.size());
    REQUIRE(four.methods.size() == methods.size());
    for (std::size_t mi = 0; mi < methods.size(); ++mi) {
      CHECK(one.methods[mi].method == methods[mi]);
      CHECK(one.methods[mi].hits == four.methods[mi].hits);
      CHECK(one.methods[mi].failures == four.methods[mi].failures);
      CHECK(one.methods[mi].mean_width == four.methods[mi].mean_width);
      CHECK(one.methods[mi].coverage == four.methods[mi].coverage);
    }
  }

  SUBCASE("report fields and invariants") {
    const CoverageReport report = run_coverage_experiment(
        config, cal.threshold, Metric::frr, cal.achieved, {"wilson", "naive-wilson"},
        0.05, 40, 0, 2);
    CHECK(report.metric == Metric::frr);
    CHECK(report.truth == cal.achieved);
    CHECK(report.replications == 40);
    CHECK(report.seed == config.seed);
    for (const MethodCoverage& mc : report.methods) {
      CHECK(mc.failures == 0);
      CHECK(mc.hits <= mc.replications);
      CHECK(mc.coverage >= 0.0);
      CHECK(mc.coverage <= 1.0);
      CHECK(mc.coverage_lower >= 0.0);
      CHECK(mc.coverage_lower <= mc.coverage);
      CHECK(mc.coverage <= mc.coverage_upper);
      CHECK(mc.coverage_upper <= 1.0);
      CHECK(mc.mean_width > 0.0);
      CHECK(mc.mean_width < 1.0);
    }
  }

  SUBCASE("impossible truth never gets covered") {
    const CoverageReport report = run_coverage_experiment(
        config, cal.threshold, Metric::frr, 0.999, {"wilson"}, 0.05, 10, 0, 1);
    CHECK(report.methods[0].hits == 0);
    CHECK(report.methods[0].coverage == 0.0);
  }

  SUBCASE("independent comparisons reach nominal coverage") {
    SyntheticConfig wide = config;
    wide.g = 40;
    const Calibration wide_cal = calibrate_threshold(wide, Metric::frr, 0.1);
    const CoverageReport report = run_coverage_experiment(
        wide, wide_cal.threshold, Metric::frr, wide_cal.achieved,
        {"wilson", "naive-wilson"}, 0.05, 200, 0, 2);
    for (const MethodCoverage& mc : report.methods) {
      CHECK(mc.coverage >= 0.88);  // nominal 0.95 within 4+ Monte Carlo SE
      CHECK(mc.coverage <= 1.0);
    }
  }

  CHECK_THROWS_AS((void)run_coverage_experiment(config, cal.threshold, Metric::frr, 0.1,
                                                {"wilson"}, 0.05, 0, 0, 1),
                  PreconditionError);
  CHECK_THROWS_AS((void)run_coverage_experiment(config, cal.threshold, Metric::frr, 0.1,
                                                {}, 0.05, 5, 0, 1),
                  PreconditionError);
  CHECK_THROWS_AS((void)run_coverage_experiment(config, cal.threshold, Metric::frr, 0.1,
                                                {"wilson"}, 1.5, 5, 0, 1),
                  PreconditionError);
}
