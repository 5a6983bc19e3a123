#include "doctest.h"

#include <cmath>
#include <cstdint>
#include <map>
#include <vector>

#include "matchci/parallel.hpp"
#include "matchci/rng.hpp"

using namespace matchci;

TEST_CASE("philox known answers") {
  // Published 10-round test vectors for this block function.
  {
    auto out = Philox4x32::block({0, 0, 0, 0}, {0, 0});
    CHECK(out[0] == 0x6627e8d5u);
    CHECK(out[1] == 0xe169c58du);
    CHECK(out[2] == 0xbc57ac4cu);
    CHECK(out[3] == 0x9b00dbd8u);
  }
  {
    auto out = Philox4x32::block({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
                                 {0xffffffffu, 0xffffffffu});
    CHECK(out[0] == 0x408f276du);
    CHECK(out[1] == 0x41c83b0eu);
    CHECK(out[2] == 0xa20bc7c6u);
    CHECK(out[3] == 0x6d5451fdu);
  }
  {
    auto out = Philox4x32::block({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                                 {0xa4093822u, 0x299f31d0u});
    CHECK(out[0] == 0xd16cfe09u);
    CHECK(out[1] == 0x94fdccebu);
    CHECK(out[2] == 0x5001e420u);
    CHECK(out[3] == 0x24126ea1u);
  }
}

TEST_CASE("streams are reproducible and distinct") {
  RngStream a(42, 7), b(42, 7), c(42, 8), d(43, 7);
  bool same_ab = true, same_ac = true, same_ad = true;
  std::vector<std::uint64_t> xs;
  for (int i = 0; i < 64; ++i) {
    const auto x = a.next_u64();
    xs.push_back(x);
    same_ab &= (x == b.next_u64());
    same_ac &= (x == c.next_u64());
    same_ad &= (x == d.next_u64());
  }
  CHECK(same_ab);
  CHECK_FALSE(same_ac);
  CHECK_FALSE(same_ad);
}

TEST_CASE("uniform bounds and mean") {
  RngStream r(1, 0);
  double sum = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = r.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    sum += u;
  }
  CHECK(std::abs(sum / n - 0.5) < 0.005);
}

TEST_CASE("uniform_int is unbiased across residues") {
  RngStream r(5, 1);
  const std::int64_t n = 7;
  std::vector<int> counts(n, 0);
  const int draws = 140000;
  for (int i = 0; i < draws; ++i) ++counts[r.uniform_int(n)];
  for (std::int64_t k = 0; k < n; ++k)
    CHECK(std::abs(counts[k] - draws / static_cast<double>(n)) < 5.0 * std::sqrt(draws / 7.0));
}

TEST_CASE("binomial matches moments, small and large np") {
  RngStream r(11, 3);
  SUBCASE("degenerate") {
    CHECK(r.binomial(0, 0.3) == 0);
    CHECK(r.binomial(10, 0.0) == 0);
    CHECK(r.binomial(10, 1.0) == 10);
  }
  SUBCASE("moments") {
    for (auto [n, p] : std::vector<std::pair<std::int64_t, double>>{
             {20, 0.05}, {1225, 0.01}, {5000, 0.5}, {300, 0.9}}) {
      double sum = 0.0, sq = 0.0;
      const int reps = 20000;
      for (int i = 0; i < reps; ++i) {
        const double k = static_cast<double>(r.binomial(n, p));
        REQUIRE(k >= 0);
        REQUIRE(k <= n);
        sum += k;
        sq += k * k;
      }
      const double mean = sum / reps;
      const double var = sq / reps - mean * mean;
      const double m = n * p, v = n * p * (1 - p);
      CHECK(std::abs(mean - m) < 5.0 * std::sqrt(v / reps));
      CHECK(std::abs(var - v) < 0.08 * v);
    }
  }
}

TEST_CASE("normal and exponential draws match moments") {
  RngStream r(17, 9);
  double sn = 0, sn2 = 0, se = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double z = r.normal();
    sn += z;
    sn2 += z * z;
    se += r.exponential(1.0);
  }
  CHECK(std::abs(sn / n) < 0.02);
  CHECK(std::abs(sn2 / n - 1.0) < 0.03);
  CHECK(std::abs(se / n - 1.0) < 0.02);
}

TEST_CASE("parallel_for result independent of thread count") {
  auto run = [](int threads) {
    std::vector<double> out(200);
    parallel_for(200, threads, [&](std::int64_t i) {
      RngStream r(99, static_cast<std::uint64_t>(i));
      out[i] = r.uniform() + r.normal();
    });
    return out;
  };
  const auto s1 = run(1);
  const auto s4 = run(4);
  CHECK(s1 == s4);
}

TEST_CASE("derive_seed separates nested streams") {
  CHECK(derive_seed(1, 2) != derive_seed(1, 3));
  CHECK(derive_seed(1, 2) != derive_seed(2, 2));
  CHECK(derive_seed(1, 2) == derive_seed(1, 2));
}
