#include <algorithm>
#include <cmath>
#include <vector>

#include "arratia/errors.hpp"
#include "arratia/flow_sim.hpp"
#include "arratia/mc_stats.hpp"
#include "arratia/meeting_analytics.hpp"
#include "arratia/stochastic_integrals.hpp"
#include "doctest.h"

using namespace arratia;

namespace {

FlowSample simulate(const Partition& p, std::uint64_t seed, std::size_t replica, int n_steps) {
  return simulate_flow(p, TimeGrid(n_steps), particle_streams(make_stream(seed, replica), p.size()));
}

}  // namespace

TEST_CASE("integrand catalog") {
  const auto c = Integrand::cosine();
  CHECK(c.sup_bound() == 1.0);
  CHECK(c(0.3) == std::cos(0.3));
  const auto t = Integrand::hyperbolic_tangent();
  CHECK(t(-2.0) == std::tanh(-2.0));
  const auto k = Integrand::constant(-2.5);
  CHECK(k(17.0) == -2.5);
  CHECK(k.sup_bound() == 2.5);
  const auto s = c.scaled(2.0);
  CHECK(s(0.4) == doctest::Approx(2.0 * std::cos(0.4)));
  CHECK(s.sup_bound() == 2.0);
  // Spot-check the declared bound on simulated positions.
  const auto sample = simulate(Partition::uniform(1.0, 4), 1, 0, 500);
  for (std::size_t k2 = 0; k2 < sample.particle_count(); ++k2) {
    for (double x : sample.path(k2)) {
      REQUIRE(std::fabs(c(x)) <= c.sup_bound());
      REQUIRE(std::fabs(t(x)) <= t.sup_bound());
    }
  }
}

TEST_CASE("stopped Ito integral on a fixed path") {
  const std::vector<double> path{0.0, 0.5, 0.2, 0.9};
  CHECK(ito_integral_stopped(path, Integrand::constant(0.0), 3) == 0.0);
  CHECK(ito_integral_stopped(path, Integrand::constant(1.0), 3) == doctest::Approx(0.9));
  CHECK(ito_integral_stopped(path, Integrand::constant(1.0), 2) == doctest::Approx(0.2));
  CHECK(ito_integral_stopped(path, Integrand::constant(1.0), 0) == 0.0);
  const double expected = std::cos(0.0) * 0.5 + std::cos(0.5) * -0.3 + std::cos(0.2) * 0.7;
  CHECK(ito_integral_stopped(path, Integrand::cosine(), 3) == doctest::Approx(expected).epsilon(1e-15));
  CHECK(quadratic_integral_stopped(path, Integrand::cosine(), 2, 0.1) ==
        doctest::Approx(0.1 * (1.0 + std::cos(0.5) * std::cos(0.5))));
  CHECK_THROWS_AS(ito_integral_stopped(path, Integrand::cosine(), 4), InvalidArgument);
  CHECK_THROWS_AS(ito_integral_stopped(path, Integrand::cosine(), -1), InvalidArgument);
}

TEST_CASE("discrete Ito isometry for a single Brownian path") {
  const int n_steps = 1000;
  const double dt = 1.0 / n_steps;
  const std::size_t replicas = 100000;
  const auto a = Integrand::cosine();
  std::vector<double> sq(replicas), quad(replicas), ito(replicas);
  for (std::size_t r = 0; r < replicas; ++r) {
    auto s = make_stream(3, r);
    std::vector<double> path(n_steps + 1, 0.0);
    for (int i = 0; i < n_steps; ++i) path[i + 1] = path[i] + std::sqrt(dt) * s.next_normal();
    ito[r] = ito_integral_stopped(path, a, n_steps);
    sq[r] = ito[r] * ito[r];
    quad[r] = quadratic_integral_stopped(path, a, n_steps, dt);
  }
  const auto m = estimate(ito);
  CHECK(std::fabs(m.mean) <= 4 * m.std_error);
  const auto d = paired_difference(sq, quad);
  CHECK(std::fabs(d.mean) <= 4 * d.std_error);
}

TEST_CASE("partition sums: degenerate integrands and exact quadratic part") {
  const auto p = Partition::uniform(1.0, 4);
  for (std::size_t r = 0; r < 50; ++r) {
    const auto s = simulate(p, 4, r, 1000);
    const auto zero = partition_sum(s, Integrand::constant(0.0));
    CHECK(zero.s_pi == 0.0);
    CHECK(zero.s_bar_pi == 0.0);
    const auto one = partition_sum(s, Integrand::constant(1.0));
    double tau_sum = 0.0;
    for (double t : left_meeting_times(s)) tau_sum += t;
    CHECK(one.s_bar_pi == doctest::Approx(tau_sum).epsilon(1e-12));
    double parts = 0.0;
    for (double q : one.quadratic_terms) {
      CHECK(q >= 0.0);
      parts += q;
    }
    CHECK(one.s_bar_pi == doctest::Approx(parts).epsilon(1e-14));
    CHECK(one.stochastic_terms.size() == p.size() - 1);
    // Telescoping: each term is x(u_k, tau_k) - u_k.
    double tele = 0.0;
    for (std::size_t k = 1; k < p.size(); ++k) tele += s.position(k, s.left_meeting_index(k)) - p.points()[k];
    CHECK(one.s_pi == doctest::Approx(tele).epsilon(1e-12));
    const auto c = partition_sum(s, Integrand::cosine());
    CHECK(c.s_bar_pi >= 0.0);
  }
  const auto pair = simulate(Partition({0.0, 1.0}), 4, 0, 10);
  CHECK_THROWS_AS(partition_sum(FlowView(pair, {0}), Integrand::constant(1.0)), InvalidArgument);
}

TEST_CASE("zero mean and isometry on {0, 0.5, 1}") {
  const auto p = Partition::uniform(1.0, 2);
  const std::size_t replicas = 100000;
  std::vector<double> s(replicas), s2(replicas), q(replicas);
  for (std::size_t r = 0; r < replicas; ++r) {
    const auto sums = partition_sum(simulate(p, 5, r, 1000), Integrand::constant(1.0));
    s[r] = sums.s_pi;
    s2[r] = sums.s_pi * sums.s_pi;
    q[r] = sums.s_bar_pi;
  }
  const auto m = estimate(s);
  CHECK(std::fabs(m.mean) <= 4 * m.std_error);
  const auto a = estimate(s2);
  const auto b = estimate(q);
  CHECK(std::fabs(a.mean - b.mean) <= 4 * std::hypot(a.std_error, b.std_error));
}

TEST_CASE("refinement increment") {
  const auto fine = Partition::uniform(1.0, 4);
  const Partition coarse({0.0, 0.5, 1.0});
  const int n_steps = 2000;
  const std::size_t replicas = 10000;
  std::vector<double> inc(replicas);
  for (std::size_t r = 0; r < replicas; ++r) {
    const auto s = simulate(fine, 6, r, n_steps);
    CHECK(refinement_increment(s, coarse, 0.25, Integrand::constant(0.0)) == 0.0);
    inc[r] = refinement_increment(s, coarse, 0.25, Integrand::constant(1.0));
    REQUIRE(inc[r] >= -1e-12);
    // With a = 1 the increment is the first meeting of 0.25 with either neighbor.
    const int zeta = std::min(s.pair_meeting_index(0, 1), s.pair_meeting_index(1, 2));
    REQUIRE(inc[r] == doctest::Approx(s.grid().time(zeta)).epsilon(1e-12));
    // Brute force from two full partition sums.
    const double brute = partition_sum(restrict_to_subpartition(s, Partition({0.0, 0.25, 0.5, 1.0})),
                                       Integrand::cosine()).s_bar_pi -
                         partition_sum(restrict_to_subpartition(s, coarse), Integrand::cosine()).s_bar_pi;
    REQUIRE(refinement_increment(s, coarse, 0.25, Integrand::cosine()) == doctest::Approx(brute).epsilon(1e-12));
  }
  const auto e = estimate(inc);
  CHECK(e.mean <= wedge_exit_bound(0.25, 0.25) + 4 * e.std_error);
  const auto s = simulate(fine, 6, 0, 100);
  CHECK_THROWS_AS(refinement_increment(s, coarse, 0.5, Integrand::cosine()), InvalidArgument);
  CHECK_THROWS_AS(refinement_increment(s, coarse, 0.3, Integrand::cosine()), InvalidArgument);
  CHECK_THROWS_AS(refinement_increment(s, Partition({0.0, 0.3, 1.0}), 0.25, Integrand::cosine()), InvalidArgument);
}

TEST_CASE("spatial integral schedule validation") {
  const std::vector<Partition> bad{Partition::uniform(1.0, 4), Partition::uniform(1.0, 2)};
  const auto streams = particle_streams(make_stream(1, 0), 5);
  CHECK_THROWS_AS(spatial_integral(bad, TimeGrid(10), Integrand::cosine(), streams), InvalidArgument);
  const std::vector<Partition> not_nested{Partition::uniform(1.0, 2), Partition::uniform(1.0, 3)};
  CHECK_THROWS_AS(validate_schedule(not_nested), InvalidArgument);
  const std::vector<Partition> extent{Partition::uniform(1.0, 2), Partition({0.0, 0.5, 1.0, 2.0})};
  CHECK_THROWS_AS(validate_schedule(extent), InvalidArgument);
  const std::vector<Partition> none;
  CHECK_THROWS_AS(validate_schedule(none), InvalidArgument);
}

TEST_CASE("single-level schedule reduces to the partition sum") {
  const std::vector<Partition> one{Partition::uniform(1.0, 4)};
  const auto streams = particle_streams(make_stream(7, 0), 5);
  const auto est = spatial_integral(one, TimeGrid(500), Integrand::cosine(), streams);
  const auto direct = partition_sum(simulate_flow(one[0], TimeGrid(500), streams), Integrand::cosine());
  REQUIRE(est.trace.size() == 1);
  CHECK(est.value == direct.s_pi);
  CHECK(est.trace[0].s_bar_pi == direct.s_bar_pi);
}

TEST_CASE("dyadic refinement: monotone S-bar and the nested-sum identity") {
  std::vector<Partition> schedule;
  for (int d = 1; d <= 6; ++d) schedule.push_back(Partition::dyadic(1.0, d));
  const std::size_t replicas = 10000;
  const auto a = Integrand::constant(1.0);
  std::vector<double> diff_sq(replicas), diff_bar(replicas), bar_fine(replicas);
  for (std::size_t r = 0; r < replicas; ++r) {
    const auto streams = particle_streams(make_stream(8, r), schedule.back().size());
    // The grid sums carry an O(|pi|^-1 dt) cross term at merge steps; 10^4 steps keeps it under the noise.
    const auto est = spatial_integral(schedule, TimeGrid(10000), a, streams);
    for (std::size_t l = 1; l < est.trace.size(); ++l) {
      REQUIRE(est.trace[l].s_bar_pi >= est.trace[l - 1].s_bar_pi - 1e-12);
    }
    const auto& coarse = est.trace[1];
    const auto& finest = est.trace.back();
    diff_sq[r] = (finest.s_pi - coarse.s_pi) * (finest.s_pi - coarse.s_pi);
    diff_bar[r] = finest.s_bar_pi - coarse.s_bar_pi;
    bar_fine[r] = finest.s_bar_pi;
  }
  const auto d = paired_difference(diff_sq, diff_bar);
  CHECK(std::fabs(d.mean) <= 4 * d.std_error);
  // Uniform bound: E S-bar <= fitted small-gap slope * U * sup a^2 * 1.1.
  const std::vector<double> grid{0.0125, 0.025, 0.0375, 0.05};
  const auto fine = estimate(bar_fine);
  CHECK(fine.mean <= small_u_slope(grid).fitted_slope * 1.0 * 1.0 * 1.1);
}

TEST_CASE("stopped-series decomposition against the partition sum") {
  const auto a = Integrand::cosine();
  // Single particle at 0: both sides are the boundary integral.
  const auto single = simulate_flow(std::span<const double>(std::vector<double>{0.0}), TimeGrid(500),
                                    particle_streams(make_stream(9, 0), 1));
  const auto t1 = lemma31_decomposition(single, a);
  CHECK(t1.series_sum == t1.m_plus_boundary);
  CHECK(t1.residual == 0.0);
  CHECK(t1.series_sum == doctest::Approx(ito_integral_stopped(single.path(0), a, 500)));

  const Partition five({0.0, 0.1, 0.3, 0.35, 0.8});
  for (std::size_t r = 0; r < 1000; ++r) {
    const auto s = simulate(five, 10, r, 1000);
    const auto z = lemma31_decomposition(s, Integrand::constant(0.0));
    REQUIRE(z.series_sum == 0.0);
    REQUIRE(z.m_plus_boundary == 0.0);
    REQUIRE(z.residual == 0.0);
    REQUIRE(std::fabs(lemma31_decomposition(s, a).residual) <= 1e-9);
    const std::vector<int> order{0, 4, 2, 1, 3};
    REQUIRE(std::fabs(lemma31_decomposition(s, a, order).residual) <= 1e-9);
  }
  const auto shifted = simulate_flow(std::span<const double>(std::vector<double>{0.1, 0.2}), TimeGrid(10),
                                     particle_streams(make_stream(9, 1), 2));
  CHECK_THROWS_AS(lemma31_decomposition(shifted, a), InvalidArgument);
  const auto s = simulate(five, 10, 0, 10);
  const std::vector<int> bad_start{1, 0, 2, 3, 4};
  CHECK_THROWS_AS(lemma31_decomposition(s, a, bad_start), InvalidArgument);
  const std::vector<int> repeated{0, 1, 1, 3, 4};
  CHECK_THROWS_AS(lemma31_decomposition(s, a, repeated), InvalidArgument);
}
