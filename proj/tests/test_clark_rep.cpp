#include <cmath>
#include <vector>

#include "arratia/clark_rep.hpp"
#include "arratia/errors.hpp"
#include "doctest.h"

using namespace arratia;

TEST_CASE("prefix view refuses future reads") {
  const FlowEnsemble e({0.0, 0.3}, TimeGrid(100), 1, 4);
  const auto s = e.sample(0);
  const PathPrefix p(s, 40);
  CHECK(p.position(1, 40) == s.position(1, 40));
  CHECK(p.current(0) == s.position(0, 40));
  CHECK(p.time() == doctest::Approx(0.4));
  CHECK_THROWS_AS(p.position(1, 41), ContractViolation);
  CHECK_THROWS_AS(p.cluster_label(0, 100), ContractViolation);
  CHECK_THROWS_AS(PathPrefix(s, 101), InvalidArgument);
}

TEST_CASE("adaptedness violations surface as contract violations") {
  const FlowEnsemble e({0.5}, TimeGrid(50), 2, 4);
  const auto rep = families::single_particle_endpoint(0.5);
  IntegrandFamily peeking{"peek", {0}, {[](const PathPrefix& p) { return p.position(0, p.now() + 1); }}};
  CHECK_THROWS_AS(verify_representation(e, rep.functional, peeking, rep.mean), ContractViolation);
}

TEST_CASE("one-particle endpoint telescopes exactly") {
  const FlowEnsemble e({0.3}, TimeGrid(1000), 3, 2000);
  const auto rep = families::single_particle_endpoint(0.3);
  const auto r = verify_representation(e, rep.functional, rep.family, rep.mean, 2);
  CHECK(r.n_paths == 2000);
  CHECK(r.max_abs_residual <= 1e-12);
  CHECK(r.mean_abs_residual <= r.max_abs_residual);
  REQUIRE(r.per_k.size() == 1);
  // Energy of f = 1 over [0, 1] is exactly 1.
  CHECK(r.per_k[0].energy.mean == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r.energy_lhs >= 0.0);
  CHECK(r.energy_rhs >= 0.0);
}

TEST_CASE("two-particle endpoint after coalescence telescopes to 1e-9") {
  const std::vector<double> starts{0.2, 0.5};
  const FlowEnsemble e(starts, TimeGrid(2000), 4, 10000);
  const auto rep = families::endpoint_after_coalescence(starts, {0, 1});
  const auto r = verify_representation(e, rep.functional, rep.family, rep.mean, 2);
  CHECK(r.max_abs_residual <= 1e-9);
  // The two integrands' supports partition [0, 1].
  CHECK(r.per_k[0].energy.mean + r.per_k[1].energy.mean == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("brute-force per-step reconstruction of the two-particle family") {
  const std::vector<double> starts{0.0, 0.1};
  const FlowEnsemble e(starts, TimeGrid(500), 5, 200);
  const auto rep = families::endpoint_after_coalescence(starts, {0, 1});
  for (std::size_t r = 0; r < e.size(); ++r) {
    const auto s = e.sample(r);
    const auto lo = s.path(0), hi = s.path(1);
    double sum = starts[1];
    bool met = false;
    for (int i = 0; i < 500; ++i) {
      met = met || s.same_cluster(0, 1, i);
      sum += met ? lo[i + 1] - lo[i] : hi[i + 1] - hi[i];
    }
    REQUIRE(std::fabs(sum - hi[500]) <= 1e-12);
    const auto d = decompose_path(s, rep.functional, rep.family);
    REQUIRE(std::fabs(rep.mean + d.integrals[0] + d.integrals[1] - sum) <= 1e-12);
  }
}

TEST_CASE("constant functional") {
  const FlowEnsemble e({0.0, 0.5, 1.0}, TimeGrid(200), 6, 500);
  const auto rep = families::constant(2.5, 3);
  const auto r = verify_representation(e, rep.functional, rep.family, rep.mean);
  CHECK(r.max_abs_residual == 0.0);
  const auto en = energy_identity_check(e, rep.functional, rep.family, rep.mean);
  CHECK(en.lhs == doctest::Approx(6.25));
  CHECK(en.rhs == doctest::Approx(6.25));
  CHECK(en.z_score == 0.0);
  const std::vector<int> ns{0, 1, 2};
  for (const auto& p : truncated_series_representation(e, rep.functional, rep.family, rep.mean, ns)) {
    CHECK(p.l2_error.mean == 0.0);
  }
}

TEST_CASE("energy identity for the endpoint families") {
  {
    const FlowEnsemble e({0.4}, TimeGrid(1000), 7, 40000);
    const auto rep = families::single_particle_endpoint(0.4);
    const auto en = energy_identity_check(e, rep.functional, rep.family, rep.mean, 2);
    CHECK(std::fabs(en.z_score) <= 4.0);
    CHECK(en.rhs == doctest::Approx(0.16 + 1.0).epsilon(1e-12));
    CHECK(std::fabs(en.lhs - 1.16) <= 4 * en.lhs_std_error);
  }
  {
    const std::vector<double> starts{0.25, 0.5};
    const FlowEnsemble e(starts, TimeGrid(1000), 8, 40000);
    const auto rep = families::endpoint_after_coalescence(starts, {0, 1});
    const auto en = energy_identity_check(e, rep.functional, rep.family, rep.mean, 2);
    const double target = 0.25 + 1.0;
    const double combined = std::hypot(en.lhs_std_error, en.rhs_std_error);
    CHECK(std::fabs(en.lhs - target) <= 4 * combined);
    CHECK(std::fabs(en.rhs - target) <= std::max(4 * combined, 1e-9));
  }
}

TEST_CASE("stopped integrals of distinct particles are orthogonal") {
  const std::vector<double> starts{0.0, 0.1, 0.3};
  const FlowEnsemble e(starts, TimeGrid(1000), 9, 20000);
  const auto rep = families::stopped_integral_series(Integrand::cosine(), {0, 1, 2});
  std::vector<std::vector<double>> ints(3, std::vector<double>(e.size()));
  for (std::size_t r = 0; r < e.size(); ++r) {
    const auto d = decompose_path(e.sample(r), rep.functional, rep.family);
    for (int k = 0; k < 3; ++k) ints[k][r] = d.integrals[k];
  }
  for (int j = 0; j < 3; ++j) {
    for (int k = j + 1; k < 3; ++k) {
      const auto res = orthogonality_test(ints[j], {ints[k]});
      CHECK(std::fabs(res[0].z) <= 4.0);
    }
  }
}

TEST_CASE("regression recovers known integrands") {
  const FlowEnsemble e({0.2}, TimeGrid(100), 10, 20000);
  {
    const auto rep = families::single_particle_endpoint(0.2);
    const std::vector<StateFunction> basis{[](const PathPrefix&) { return 1.0; }};
    for (int i : {0, 37, 99}) {
      const auto r = estimate_integrand_regression(e, rep.functional, 0, i, basis);
      CHECK(std::fabs(r.coefficients[0] - 1.0) <= 4 * r.std_errors[0]);
    }
  }
  {
    const auto rep = families::endpoint_square(0.2);
    const std::vector<StateFunction> basis{[](const PathPrefix&) { return 1.0; },
                                           [](const PathPrefix& p) { return p.current(0); }};
    const auto r = estimate_integrand_regression(e, rep.functional, 0, 50, basis);
    CHECK(std::fabs(r.coefficients[0]) <= 4 * r.std_errors[0]);
    CHECK(std::fabs(r.coefficients[1] - 2.0) <= 4 * r.std_errors[1]);
    // The known f = 2 x(t) reconstructs x(1)^2 up to the discrete quadratic variation.
    const auto v = verify_representation(e, rep.functional, rep.family, rep.mean);
    CHECK(v.mean_abs_residual < 0.2);
  }
  {
    const auto rep = families::constant(3.0, 1);
    const std::vector<StateFunction> basis{[](const PathPrefix&) { return 1.0; }};
    const auto r = estimate_integrand_regression(e, rep.functional, 0, 10, basis);
    CHECK(std::fabs(r.coefficients[0]) <= 4 * r.std_errors[0]);
  }
  {
    const auto rep = families::single_particle_endpoint(0.2);
    const std::vector<StateFunction> collinear{[](const PathPrefix&) { return 1.0; },
                                               [](const PathPrefix&) { return 2.0; }};
    CHECK_THROWS_AS(estimate_integrand_regression(e, rep.functional, 0, 5, collinear), DegenerateRegression);
    CHECK_THROWS_AS(estimate_integrand_regression(e, rep.functional, 0, 100, collinear), InvalidArgument);
  }
}

TEST_CASE("dense sequence and sequence order") {
  const auto seq = dyadic_dense_sequence(1.0, 2);
  CHECK(seq == std::vector<double>{0.0, 1.0, 0.5, 0.25, 0.75});
  const auto starts = Partition::dyadic(1.0, 2).points();
  CHECK(sequence_order(starts, seq) == std::vector<int>{0, 4, 2, 1, 3});
  const std::vector<double> missing{0.0, 0.3};
  CHECK_THROWS_AS(sequence_order(starts, missing), InvalidArgument);
}

TEST_CASE("truncated series: exact beyond the support, monotone before") {
  const auto seq = dyadic_dense_sequence(1.0, 3);
  const auto starts = Partition::dyadic(1.0, 3).points();
  const auto order = sequence_order(starts, seq);
  const FlowEnsemble e(starts, TimeGrid(500), 11, 5000);
  const std::vector<int> ns{0, 1, 2, 4, 8};

  const auto local = families::endpoint_after_coalescence(starts, order);
  const auto lp = truncated_series_representation(e, local.functional, local.family, local.mean, ns);
  CHECK(lp[0].l2_error.mean > 0.0);
  for (std::size_t i = 1; i < lp.size(); ++i) CHECK(lp[i].l2_error.mean <= 1e-20);

  const auto series = families::stopped_integral_series(Integrand::hyperbolic_tangent(), order);
  const auto sp = truncated_series_representation(e, series.functional, series.family, series.mean, ns);
  for (std::size_t i = 1; i < sp.size(); ++i) {
    REQUIRE(sp[i].change.has_value());
    CHECK(sp[i].change->mean <= 4 * sp[i].change->std_error);
  }
  CHECK(sp.back().l2_error.mean <= 1e-20);
}

TEST_CASE("family validation") {
  const FlowEnsemble e({0.0, 0.5}, TimeGrid(10), 12, 4);
  const auto rep = families::single_particle_endpoint(0.0);
  IntegrandFamily dup{"dup", {0, 0}, {[](const PathPrefix&) { return 1.0; }, [](const PathPrefix&) { return 1.0; }}};
  CHECK_THROWS_AS(decompose_path(e.sample(0), rep.functional, dup), InvalidArgument);
  IntegrandFamily ragged{"ragged", {0, 1}, {[](const PathPrefix&) { return 1.0; }}};
  CHECK_THROWS_AS(decompose_path(e.sample(0), rep.functional, ragged), InvalidArgument);
}
