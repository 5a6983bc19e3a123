#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <vector>

#include "helpers.hpp"
#include "matchci/bootstrap.hpp"
#include "matchci/estimators.hpp"

using namespace matchci;

namespace {

PairAggregates balanced_agg(int g, int m, std::uint64_t seed) {
  RngStream rng(seed, 0);
  return make_aggregates(testing::random_y_bar(g, rng),
                         Eigen::VectorXd::Constant(g, m));
}

Eigen::VectorXd weights(std::initializer_list<double> v) {
  Eigen::VectorXd w(static_cast<int>(v.size()));
  int i = 0;
  for (double x : v) w(i++) = x;
  return w;
}

}  // namespace

TEST_CASE("weight draws have the right support") {
  RngStream rng(11, 0);
  for (int rep = 0; rep < 50; ++rep) {
    Eigen::VectorXd w = draw_multinomial_weights(7, rng);
    CHECK(w.sum() == 7.0);
    CHECK(w.minCoeff() >= 0.0);
    Eigen::VectorXd d = draw_don_weights(7, rng);
    for (int i = 0; i < 7; ++i) CHECK((d(i) == 0.0 || d(i) == 2.0));
  }
}

TEST_CASE("replicates on hand-worked weight vectors") {
  // Two identities, two instances each; distinct cell means.
  Eigen::MatrixXd y(2, 2);
  y << 0.25, 0.75, 0.75, 0.5;
  const auto agg = make_aggregates(y, Eigen::VectorXd::Constant(2, 2));

  SUBCASE("subsets with all weight on one identity") {
    const auto r = subsets_replicate(agg, weights({2, 0}));
    CHECK(r.frr_valid);
    CHECK(r.frr == doctest::Approx(0.25).epsilon(1e-15));
    // FAR keeps the cross row of the selected identity.
    CHECK(r.far_valid);
    CHECK(r.far == doctest::Approx(0.75).epsilon(1e-15));
  }

  SUBCASE("vertex with all weight on one identity falls back to the pooled rate") {
    const auto r = vertex_replicate(agg, weights({2, 0}));
    CHECK(r.far_valid);
    CHECK(r.far == doctest::Approx(0.75).epsilon(1e-15));  // only swap pairs remain
  }

  SUBCASE("double-or-nothing selecting both identities reproduces the sample") {
    const auto r = don_replicate(agg, weights({2, 2}));
    CHECK(r.frr == doctest::Approx((0.25 + 0.5) / 2).epsilon(1e-15));
    CHECK(r.far == doctest::Approx(0.75).epsilon(1e-15));
  }

  SUBCASE("double-or-nothing with one identity has no impostor pairs") {
    const auto r = don_replicate(agg, weights({2, 0}));
    CHECK(r.frr_valid);
    CHECK_FALSE(r.far_valid);
  }
}

TEST_CASE("vertex replicate mixes swap pairs with the original rate") {
  // Three singleton identities: no genuine pairs, FAR only.
  Eigen::MatrixXd y(3, 3);
  y << 0.0, 0.4, 0.8, 0.4, 0.0, 0.1, 0.8, 0.1, 0.0;
  const auto agg = make_aggregates(y, Eigen::VectorXd::Ones(3));
  const double far_hat = estimate_far(agg).value;

  const auto r = vertex_replicate(agg, weights({2, 1, 0}));
  // Swap mass 2*1, cross mass 2*(w0*w1) = 4 on the (0,1) cell.
  const double expect = (2.0 * far_hat + 4.0 * y(0, 1)) / 6.0;
  CHECK(r.far_valid);
  CHECK(r.far == doctest::Approx(expect).epsilon(1e-15));

  const auto s = subsets_replicate(agg, weights({3, 0, 0}));
  CHECK(s.far == doctest::Approx((y(0, 1) + y(0, 2)) / 2).epsilon(1e-15));
  CHECK_FALSE(s.frr_valid);  // no identity has two instances
}

TEST_CASE("balanced replicates match the plain reweighted-mean forms") {
  const int g = 6;
  const auto agg = balanced_agg(g, 3, 77);
  const double far_hat = estimate_far(agg).value;
  RngStream rng(78, 0);
  for (int rep = 0; rep < 50; ++rep) {
    const Eigen::VectorXd w = draw_multinomial_weights(g, rng);

    double diag = 0.0, cross = 0.0, self = 0.0, pairs = 0.0;
    for (int i = 0; i < g; ++i) {
      diag += w(i) * agg.y_bar(i, i);
      self += w(i) * (w(i) - 1.0);
      for (int j = 0; j < g; ++j) {
        if (j == i) continue;
        cross += w(i) * w(j) * agg.y_bar(i, j);
        pairs += w(i) * w(j);
      }
    }

    const auto sub = subsets_replicate(agg, w);
    CHECK(sub.frr == doctest::Approx(diag / g).epsilon(1e-12));
    double rows = 0.0;
    for (int i = 0; i < g; ++i)
      for (int j = 0; j < g; ++j)
        if (j != i) rows += w(i) * agg.y_bar(i, j);
    CHECK(sub.far == doctest::Approx(rows / (g * (g - 1.0))).epsilon(1e-12));

    const auto vtx = vertex_replicate(agg, w);
    CHECK(vtx.frr == doctest::Approx(sub.frr).epsilon(1e-15));
    CHECK(vtx.far ==
          doctest::Approx((self * far_hat + cross) / (g * (g - 1.0))).epsilon(1e-12));

    const Eigen::VectorXd d = draw_don_weights(g, rng);
    const auto don = don_replicate(agg, d);
    double ddiag = 0.0, dcross = 0.0, dpairs = 0.0;
    for (int i = 0; i < g; ++i) {
      ddiag += d(i) * agg.y_bar(i, i);
      for (int j = 0; j < g; ++j)
        if (j != i) {
          dcross += d(i) * d(j) * agg.y_bar(i, j);
          dpairs += d(i) * d(j);
        }
    }
    if (don.frr_valid) CHECK(don.frr == doctest::Approx(ddiag / d.sum()).epsilon(1e-12));
    if (don.far_valid) CHECK(don.far == doctest::Approx(dcross / dpairs).epsilon(1e-12));
  }
}

TEST_CASE("resampling means are exact over the full weight distribution") {
  SUBCASE("multinomial schemes, enumerated at G=3") {
    const auto agg = balanced_agg(3, 2, 5);
    const double frr_hat = estimate_frr(agg).value;
    const double far_hat = estimate_far(agg).value;
    double sub_frr = 0.0, sub_far = 0.0, vtx_far = 0.0;
    int draws = 0;
    // All 27 equally likely ball-into-box assignments.
    for (int b0 = 0; b0 < 3; ++b0)
      for (int b1 = 0; b1 < 3; ++b1)
        for (int b2 = 0; b2 < 3; ++b2) {
          Eigen::VectorXd w = Eigen::VectorXd::Zero(3);
          w(b0) += 1.0;
          w(b1) += 1.0;
          w(b2) += 1.0;
          const auto s = subsets_replicate(agg, w);
          const auto v = vertex_replicate(agg, w);
          REQUIRE(s.frr_valid);
          REQUIRE(s.far_valid);
          REQUIRE(v.far_valid);
          sub_frr += s.frr;
          sub_far += s.far;
          vtx_far += v.far;
          ++draws;
        }
    CHECK(sub_frr / draws == doctest::Approx(frr_hat).epsilon(1e-12));
    CHECK(sub_far / draws == doctest::Approx(far_hat).epsilon(1e-12));
    CHECK(vtx_far / draws == doctest::Approx(far_hat).epsilon(1e-12));
  }

  SUBCASE("double-or-nothing, enumerated at G=6 with per-metric validity") {
    const auto agg = balanced_agg(6, 2, 6);
    double frr_sum = 0.0, far_sum = 0.0;
    int frr_n = 0, far_n = 0;
    for (int mask = 0; mask < 64; ++mask) {
      Eigen::VectorXd w(6);
      for (int i = 0; i < 6; ++i) w(i) = (mask >> i) & 1 ? 2.0 : 0.0;
      const auto r = don_replicate(agg, w);
      if (r.frr_valid) {
        frr_sum += r.frr;
        ++frr_n;
      }
      if (r.far_valid) {
        far_sum += r.far;
        ++far_n;
      }
    }
    CHECK(frr_n == 63);  // any non-empty subset
    CHECK(far_n == 57);  // subsets of size >= 2
    CHECK(frr_sum / frr_n == doctest::Approx(estimate_frr(agg).value).epsilon(1e-12));
    CHECK(far_sum / far_n == doctest::Approx(estimate_far(agg).value).epsilon(1e-12));
  }
}

TEST_CASE("two-level resampling") {
  RngStream data_rng(31, 0);
  const auto ds = testing::random_dataset({3, 2, 2, 3}, data_rng);
  const auto agg = aggregate_pairs(ds, 0.5);
  REQUIRE(agg.has_outcome_store);

  SUBCASE("passthrough with unit weights reproduces the point estimates") {
    RngStream rng(1, 0);
    const auto r = two_level_replicate(agg, Eigen::VectorXd::Ones(4), rng, true);
    CHECK(r.frr == doctest::Approx(estimate_frr(agg).value).epsilon(1e-12));
    CHECK(r.far == doctest::Approx(estimate_far(agg).value).epsilon(1e-12));
  }

  SUBCASE("degenerate outcome rows resample to themselves") {
    // Every comparison an error: genuine scores at the threshold, impostors below.
    const auto all_err = testing::make_score_dataset(
        {2, 2}, [](int a, int b) { return a / 2 == b / 2 ? 0.5 : 0.1; });
    const auto agg2 = aggregate_pairs(all_err, 0.5);
    RngStream rng(2, 0);
    const auto r = two_level_replicate(agg2, weights({2, 1}), rng, false);
    CHECK(r.frr == 1.0);
    CHECK(r.far == 1.0);
  }

  SUBCASE("both stages are mean-preserving on a balanced design") {
    // Balanced counts make the first-stage ratio linear in the weights, so
    // the replicate mean is exactly unbiased; check it through Monte Carlo.
    RngStream brng(32, 0);
    const auto bal = aggregate_pairs(testing::random_dataset({2, 2, 2, 2, 2, 2}, brng), 0.5);
    for (auto metric : {Metric::frr, Metric::far}) {
      const auto dist =
          bootstrap_distribution(bal, BootstrapScheme::two_level, metric, 20000, 99);
      double mean = 0.0;
      for (double v : dist.values) mean += v;
      mean /= static_cast<double>(dist.values.size());
      double sd = 0.0;
      for (double v : dist.values) sd += (v - mean) * (v - mean);
      sd = std::sqrt(sd / (dist.values.size() - 1.0));
      const double se = sd / std::sqrt(static_cast<double>(dist.values.size()));
      const double target =
          (metric == Metric::frr ? estimate_frr(bal) : estimate_far(bal)).value;
      CHECK(std::abs(mean - target) < 4.0 * se);
    }
  }

  SUBCASE("requires the outcome store") {
    const auto bare = balanced_agg(4, 2, 8);
    RngStream rng(3, 0);
    CHECK_THROWS_AS(two_level_replicate(bare, Eigen::VectorXd::Ones(4), rng),
                    PreconditionError);
    CHECK_THROWS_AS(
        bootstrap_distribution(bare, BootstrapScheme::two_level, Metric::far, 200, 1),
        PreconditionError);
  }
}

TEST_CASE("bootstrap_distribution is deterministic and thread-count invariant") {
  RngStream data_rng(41, 0);
  const auto ds = testing::random_dataset({2, 2, 2, 2, 2, 2}, data_rng);
  const auto agg = aggregate_pairs(ds, 0.45);
  for (auto scheme : {BootstrapScheme::subsets, BootstrapScheme::vertex,
                      BootstrapScheme::double_or_nothing, BootstrapScheme::two_level}) {
    CAPTURE(scheme_name(scheme));
    const auto one = bootstrap_distribution(agg, scheme, Metric::far, 400, 1234, 1);
    const auto four = bootstrap_distribution(agg, scheme, Metric::far, 400, 1234, 4);
    REQUIRE(one.values.size() == four.values.size());
    for (std::size_t i = 0; i < one.values.size(); ++i)
      CHECK(one.values[i] == four.values[i]);
    const auto other = bootstrap_distribution(agg, scheme, Metric::far, 400, 1235, 1);
    CHECK(one.values != other.values);
  }
}

TEST_CASE("degenerate draws are redrawn and counted") {
  // G=2 double-or-nothing: the only FAR-valid draw keeps both identities, so
  // every replicate equals the pooled rate and half the draws get rejected.
  Eigen::MatrixXd y(2, 2);
  y << 0.0, 0.3, 0.3, 0.0;
  const auto agg = make_aggregates(y, Eigen::VectorXd::Constant(2, 2));
  const auto dist =
      bootstrap_distribution(agg, BootstrapScheme::double_or_nothing, Metric::far, 200, 7);
  CHECK(dist.rejected_draws > 0);
  for (double v : dist.values) CHECK(v == doctest::Approx(0.3).epsilon(1e-15));
}

TEST_CASE("bootstrap preconditions") {
  const auto singletons = make_aggregates(
      (Eigen::MatrixXd(2, 2) << 0, 0.5, 0.5, 0).finished(), Eigen::VectorXd::Ones(2));
  CHECK_THROWS_AS(
      bootstrap_distribution(singletons, BootstrapScheme::subsets, Metric::frr, 200, 1),
      PreconditionError);

  const auto one_id =
      make_aggregates((Eigen::MatrixXd(1, 1) << 0.25).finished(),
                      Eigen::VectorXd::Constant(1, 3));
  CHECK_THROWS_AS(
      bootstrap_distribution(one_id, BootstrapScheme::subsets, Metric::far, 200, 1),
      PreconditionError);

  const auto agg = balanced_agg(4, 2, 9);
  CHECK_THROWS_AS(bootstrap_distribution(agg, BootstrapScheme::subsets, Metric::far, 0, 1),
                  PreconditionError);
}

TEST_CASE("percentile interval index arithmetic") {
  BootstrapDistribution dist;
  dist.metric = Metric::far;
  dist.scheme = BootstrapScheme::subsets;

  SUBCASE("B=100 at alpha=0.05 picks the 2nd and 98th order statistics") {
    for (int k = 100; k >= 1; --k) dist.values.push_back(static_cast<double>(k));
    const auto iv = percentile_interval(dist, 0.05);
    CHECK(iv.lower == 2.0);
    CHECK(iv.upper == 98.0);
    CHECK(iv.method == "subsets");
    CHECK(iv.diagnostics.at("lower_index") == 2.0);
    CHECK(iv.diagnostics.at("upper_index") == 98.0);
    CHECK(iv.diagnostics.at("lower_index_clamped") == 0.0);
    CHECK(std::isnan(iv.point));
  }

  SUBCASE("B=1000 grid recovers the 2.5% and 97.5% quantiles") {
    for (int k = 1; k <= 1000; ++k) dist.values.push_back(k / 1000.0);
    const auto iv = percentile_interval(dist, 0.05);
    CHECK(iv.lower == doctest::Approx(0.025).epsilon(1e-15));
    CHECK(iv.upper == doctest::Approx(0.975).epsilon(1e-15));
  }

  SUBCASE("tiny alpha clamps the lower index to the minimum") {
    for (int k = 1; k <= 100; ++k) dist.values.push_back(static_cast<double>(k));
    const auto iv = percentile_interval(dist, 0.001);
    CHECK(iv.lower == 1.0);
    CHECK(iv.upper == 100.0);
    CHECK(iv.diagnostics.at("lower_index_clamped") == 1.0);
  }

  SUBCASE("too few replicates or a bad alpha is an error") {
    for (int k = 1; k <= 99; ++k) dist.values.push_back(static_cast<double>(k));
    CHECK_THROWS_AS(percentile_interval(dist, 0.05), PreconditionError);
    dist.values.push_back(100.0);
    CHECK_THROWS_AS(percentile_interval(dist, 0.0), PreconditionError);
    CHECK_THROWS_AS(percentile_interval(dist, 1.0), PreconditionError);
  }
}

TEST_CASE("bootstrap_interval carries the plug-in point estimate") {
  RngStream data_rng(51, 0);
  const auto ds = testing::random_dataset({2, 2, 2, 2, 2}, data_rng);
  const auto agg = aggregate_pairs(ds, 0.5);
  const auto iv =
      bootstrap_interval(agg, BootstrapScheme::subsets, Metric::far, 500, 17, 0.05);
  CHECK(iv.point == doctest::Approx(estimate_far(agg).value).epsilon(1e-15));
  CHECK(iv.lower <= iv.point);
  CHECK(iv.upper >= iv.point);
  CHECK(iv.method == "subsets");
  CHECK(iv.diagnostics.at("seed") == 17.0);
}
