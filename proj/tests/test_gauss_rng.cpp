#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "arratia/errors.hpp"
#include "arratia/gauss_rng.hpp"
#include "arratia/mc_stats.hpp"
#include "doctest.h"

using namespace arratia;

TEST_CASE("philox4x32-10 known answers") {
  using philox::Counter;
  using philox::Key;
  CHECK(philox::block(Counter{0, 0, 0, 0}, Key{0, 0}) == Counter{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  CHECK(philox::block(Counter{0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, Key{0xffffffff, 0xffffffff}) ==
        Counter{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  CHECK(philox::block(Counter{0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, Key{0xa4093822, 0x299f31d0}) ==
        Counter{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("same seed and stream id reproduce the sequence") {
  auto a = make_stream(7, 3);
  auto b = make_stream(7, 3);
  CHECK(a.position() == 0);
  for (int i = 0; i < 1000; ++i) REQUIRE(a.next_normal() == b.next_normal());
  CHECK(a.position() == 1000);
  CHECK(a.normal_at(17) == make_stream(7, 3).normal_at(17));
  a.seek(17);
  CHECK(a.next_normal() == b.normal_at(17));
}

TEST_CASE("distinct stream ids are uncorrelated") {
  const int n = 1000000;
  const auto a = make_stream(7, 3);
  const auto b = make_stream(7, 4);
  double sab = 0, sa = 0, sb = 0, saa = 0, sbb = 0;
  for (int i = 0; i < n; ++i) {
    const double x = a.normal_at(i), y = b.normal_at(i);
    sab += x * y;
    sa += x;
    sb += y;
    saa += x * x;
    sbb += y * y;
  }
  const double cov = sab / n - (sa / n) * (sb / n);
  const double corr = cov / std::sqrt((saa / n - sa * sa / n / n) * (sbb / n - sb * sb / n / n));
  CHECK(std::fabs(corr) <= 4.0 / std::sqrt(n));
}

TEST_CASE("children are distinct from parent and siblings") {
  const auto s = make_stream(11, 5);
  const auto c0 = s.child(0);
  const auto c1 = s.child(1);
  CHECK(c0.normal_at(0) != c1.normal_at(0));
  CHECK(c0.normal_at(0) != s.normal_at(0));
  CHECK(s.child(0).normal_at(3) == c0.normal_at(3));
}

TEST_CASE("normal moments over 1e6 draws") {
  auto s = make_stream(2024, 0);
  const int n = 1000000;
  double sum = 0, sq = 0;
  for (int i = 0; i < n; ++i) {
    const double x = s.next_normal();
    sum += x;
    sq += x * x;
  }
  const double mean = sum / n;
  const double var = sq / n - mean * mean;
  CHECK(std::fabs(mean) <= 4e-3);
  CHECK(std::fabs(var - 1.0) <= 1e-2);
}

TEST_CASE("uniforms lie strictly inside (0, 1) with mean 1/2") {
  auto s = make_stream(99, 1);
  double sum = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = s.next_uniform();
    REQUIRE(u > 0.0);
    REQUIRE(u < 1.0);
    sum += u;
  }
  CHECK(std::fabs(sum / n - 0.5) <= 4.0 * std::sqrt(1.0 / 12.0 / n));
  CHECK(bits_to_open_unit(0) > 0.0);
  CHECK(bits_to_open_unit(~0ULL) < 1.0);
}

TEST_CASE("KS test of 1e5 draws against N(0,1) at level 1e-3") {
  auto s = make_stream(31337, 9);
  std::vector<double> x(100000);
  for (auto& v : x) v = s.next_normal();
  const double d = ks_statistic(x, normal_cdf);
  CHECK(d * std::sqrt(static_cast<double>(x.size())) < ks_critical_coefficient(1e-3));
}

TEST_CASE("inverse normal cdf") {
  CHECK(inverse_normal_cdf(0.5) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(inverse_normal_cdf(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-14));
  CHECK(inverse_normal_cdf(1e-10) == doctest::Approx(-6.361340902404056).epsilon(1e-12));
  for (double p : {1e-300, 1e-20, 0.01, 0.3, 0.7, 0.99, 1 - 1e-12}) {
    CHECK(normal_cdf(inverse_normal_cdf(p)) == doctest::Approx(p).epsilon(1e-9));
  }
  CHECK_THROWS_AS(inverse_normal_cdf(0.0), InvalidArgument);
  CHECK_THROWS_AS(inverse_normal_cdf(1.0), InvalidArgument);
}

TEST_CASE("brownian increments") {
  auto s = make_stream(1, 1);
  CHECK(brownian_increments(s, 0, 1e-4).empty());
  CHECK_THROWS_AS(brownian_increments(s, -1, 1e-4), InvalidArgument);
  CHECK_THROWS_AS(brownian_increments(s, 10, 0.0), InvalidArgument);
  CHECK(brownian_increments(s, 17, 1e-2).size() == 17);
}

TEST_CASE("endpoint variance and Brownian scaling") {
  const std::size_t replicas = 100000;
  std::vector<double> ends1(replicas), ends2(replicas);
  const int n = 1000;
  for (std::size_t r = 0; r < replicas; ++r) {
    auto s = make_stream(5, r);
    const auto inc = brownian_increments(s, n, 1e-3);
    ends1[r] = std::accumulate(inc.begin(), inc.end(), 0.0);
    auto t = make_stream(6, r);
    const auto inc2 = brownian_increments(t, n, 2e-3);
    ends2[r] = std::accumulate(inc2.begin(), inc2.end(), 0.0);
  }
  std::vector<double> sq1(replicas), sq2(replicas);
  for (std::size_t r = 0; r < replicas; ++r) {
    sq1[r] = ends1[r] * ends1[r];
    sq2[r] = ends2[r] * ends2[r];
  }
  const auto v1 = estimate(sq1);
  const auto v2 = estimate(sq2);
  CHECK(std::fabs(v1.mean - 1.0) <= 4.0 * v1.std_error);
  CHECK(std::fabs(v2.mean - 2.0) <= 4.0 * v2.std_error);
  const double ratio_se = std::hypot(v2.std_error / v1.mean, v2.mean * v1.std_error / (v1.mean * v1.mean));
  CHECK(std::fabs(v2.mean / v1.mean - 2.0) <= 4.0 * ratio_se);
}

TEST_CASE("full-resolution endpoint variance: 1e4 steps of 1e-4") {
  const std::size_t replicas = 20000;
  std::vector<double> sq(replicas);
  for (std::size_t r = 0; r < replicas; ++r) {
    auto s = make_stream(77, r);
    const auto inc = brownian_increments(s, 10000, 1e-4);
    const double e = std::accumulate(inc.begin(), inc.end(), 0.0);
    sq[r] = e * e;
  }
  const auto v = estimate(sq);
  CHECK(std::fabs(v.mean - 1.0) <= 4.0 * v.std_error);
}

TEST_CASE("bridge crossing probability") {
  CHECK(bridge_crossing_prob(0.0, 0.3, 1e-4, 2.0) == 1.0);
  CHECK(bridge_crossing_prob(0.3, 0.0, 1e-4, 2.0) == 1.0);
  CHECK(bridge_crossing_prob(1.0, 1.0, 1e-4, 2.0) < 1e-300);
  const double d = std::sqrt(2.0 * 1e-4);
  CHECK(bridge_crossing_prob(d, d, 1e-4, 2.0) == doctest::Approx(0.1353352832366127).epsilon(1e-13));
  double prev = 1.0;
  for (double d0 = 0.0; d0 < 0.05; d0 += 0.001) {
    const double p = bridge_crossing_prob(d0, 0.01, 1e-4, 2.0);
    CHECK(p <= prev);
    prev = p;
  }
  CHECK_THROWS_AS(bridge_crossing_prob(-0.1, 0.1, 1e-4, 2.0), InvalidArgument);
  CHECK_THROWS_AS(bridge_crossing_prob(0.1, -0.1, 1e-4, 2.0), InvalidArgument);
  CHECK_THROWS_AS(bridge_crossing_prob(0.1, 0.1, 0.0, 2.0), InvalidArgument);
  CHECK_THROWS_AS(bridge_crossing_prob(0.1, 0.1, 1e-4, 0.0), InvalidArgument);
}

TEST_CASE("bridge probability matches a fine-grid bridge simulation") {
  // Brute force: simulate the bridge on 200 substeps and count zero touches.
  const double d0 = 0.01, d1 = 0.015, dt = 1e-4, rate = 2.0;
  const int sub = 200, reps = 40000;
  int hits = 0;
  for (int r = 0; r < reps; ++r) {
    auto s = make_stream(404, r);
    std::vector<double> w(sub + 1, 0.0);
    for (int i = 1; i <= sub; ++i) w[i] = w[i - 1] + std::sqrt(rate * dt / sub) * s.next_normal();
    bool hit = false;
    for (int i = 0; i <= sub && !hit; ++i) {
      const double t = static_cast<double>(i) / sub;
      const double b = d0 + (d1 - d0) * t + w[i] - t * w[sub];
      hit = b <= 0.0;
    }
    hits += hit;
  }
  const double p = static_cast<double>(hits) / reps;
  const double exact = bridge_crossing_prob(d0, d1, dt, rate);
  // Discrete monitoring misses touches, so the grid estimate sits below.
  CHECK(p <= exact + 4.0 * std::sqrt(exact * (1 - exact) / reps));
  CHECK(p >= 0.7 * exact);
}
