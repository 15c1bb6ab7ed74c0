#include "arratia/meeting_analytics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "arratia/errors.hpp"
#include "arratia/quadrature.hpp"

namespace arratia {

namespace {

constexpr double kQuadratureTolerance = 1e-8;

double checked(const QuadratureResult& r, const char* what) {
  if (!r.converged) throw std::runtime_error(std::string(what) + ": quadrature did not converge");
  return r.value;
}

}  // namespace

double meeting_time_mean_quadrature(double u) {
  if (u < 0.0 || !std::isfinite(u)) throw InvalidArgument("meeting_time_mean_quadrature: u must be >= 0");
  if (u == 0.0) return 0.0;
  // erf(u / (2 sqrt t)) leaves its plateau at t ~ u^2; the sqrt behavior
  // near 0 is resolved by seeding breakpoints around that scale.
  const double knee = std::min(u * u, 1.0);
  const auto r = integrate_adaptive([u](double t) { return t > 0.0 ? std::erf(u / (2.0 * std::sqrt(t))) : 1.0; },
                                    {0.0, 0.01 * knee, knee, 1.0}, kQuadratureTolerance);
  return std::clamp(checked(r, "meeting_time_mean_quadrature"), 0.0, 1.0);
}

double meeting_time_mean_two_term_formula(double u) {
  if (u < 0.0 || !std::isfinite(u)) throw InvalidArgument("meeting_time_mean_two_term_formula: u must be >= 0");
  // int_{-u}^{u} p_2(v) dv = P(|N(0, 2)| < u) = erf(u / 2).
  return meeting_time_mean_quadrature(u) + std::erf(u / 2.0);
}

double slope_through_origin(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.empty()) throw InvalidArgument("slope_through_origin: size mismatch");
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += x[i] * y[i];
    sxx += x[i] * x[i];
  }
  if (!(sxx > 0.0)) throw InvalidArgument("slope_through_origin: degenerate abscissae");
  return sxy / sxx;
}

SmallGapSlope small_u_slope(std::span<const double> u_grid) {
  if (u_grid.size() < 4) throw InvalidArgument("small_u_slope: need at least 4 gaps");
  std::vector<double> means;
  means.reserve(u_grid.size());
  for (double u : u_grid) {
    if (!(u > 0.0 && u <= 0.05)) throw InvalidArgument("small_u_slope: gaps must lie in (0, 0.05]");
    means.push_back(meeting_time_mean_quadrature(u));
  }
  return {slope_through_origin(u_grid, means), 3.0 / (2.0 * std::sqrt(std::numbers::pi)),
          2.0 / std::sqrt(std::numbers::pi)};
}

double quadrant_exit_mean_quadrature(double r1, double r2, double var_rate1, double var_rate2) {
  if (!(r1 > 0.0) || !(r2 > 0.0)) throw InvalidArgument("quadrant_exit_mean_quadrature: starts must be > 0");
  if (!(var_rate1 > 0.0) || !(var_rate2 > 0.0)) throw InvalidArgument("quadrant_exit_mean_quadrature: bad rates");
  const double k1 = std::min(r1 * r1 / var_rate1, 1.0);
  const double k2 = std::min(r2 * r2 / var_rate2, 1.0);
  const auto survival = [=](double t) {
    if (t <= 0.0) return 1.0;
    return std::erf(r1 / std::sqrt(2.0 * var_rate1 * t)) * std::erf(r2 / std::sqrt(2.0 * var_rate2 * t));
  };
  const double lo = std::min(k1, k2), hi = std::max(k1, k2);
  const auto r = integrate_adaptive(survival, {0.0, 0.01 * lo, lo, hi, 1.0}, kQuadratureTolerance);
  return std::clamp(checked(r, "quadrant_exit_mean_quadrature"), 0.0, 1.0);
}

double wedge_exit_bound(double left_gap, double right_gap) {
  if (!(left_gap > 0.0) || !(right_gap > 0.0)) throw InvalidArgument("wedge_exit_bound: gaps must be > 0");
  // Keep one gap G (rate 2) as a coordinate; H = other + G / 2 is
  // uncorrelated with G, has rate 3/2 and stays positive inside the wedge.
  const double keep_left = quadrant_exit_mean_quadrature(left_gap, right_gap + 0.5 * left_gap, 2.0, 1.5);
  const double keep_right = quadrant_exit_mean_quadrature(right_gap, left_gap + 0.5 * right_gap, 2.0, 1.5);
  return std::min(keep_left, keep_right);
}

AngleExitResult angle_exit_bound_experiment(double r1, double r2, const TimeGrid& grid, std::size_t n_paths,
                                            std::uint64_t seed, unsigned workers) {
  if (!(r1 > 0.0) || !(r2 > 0.0)) throw InvalidArgument("angle_exit_bound_experiment: starts must be > 0");
  if (n_paths < 2) throw InvalidArgument("angle_exit_bound_experiment: need at least 2 paths");
  const int n_steps = grid.n_steps();
  const double dt = grid.dt();
  const double sd = std::sqrt(dt);

  const auto exits = [&](const GaussianStream& s, double& x, std::uint64_t i) {
    const double next = x + sd * s.normal_at(i);
    bool hit = next <= 0.0;
    if (!hit) {
      const double exponent = 2.0 * x * next / dt;  // unit variance rate
      hit = exponent < 745.0 && s.uniform_at(i) < std::exp(-exponent);
    }
    x = next;
    return hit;
  };

  const auto table = run_replicas(n_paths, seed, workers, [&](std::size_t, GaussianStream& stream) {
    const auto s1 = stream.child(0);
    const auto s2 = stream.child(1);
    double x = r1, y = r2;
    for (int i = 0; i < n_steps; ++i) {
      const bool hx = exits(s1, x, static_cast<std::uint64_t>(i));
      const bool hy = exits(s2, y, static_cast<std::uint64_t>(i));
      if (hx || hy) return std::vector<double>{grid.time(i + 1)};
    }
    return std::vector<double>{1.0};
  });
  const auto est = estimate(table.column(0));
  return {r1, r2, est.mean, est.std_error, est.mean / (r1 * r2)};
}

EstimatorResult meeting_time_monte_carlo(double u, const TimeGrid& grid, std::size_t n_paths, std::uint64_t seed,
                                         unsigned workers, bool bridge_correction) {
  if (!(u > 0.0)) throw InvalidArgument("meeting_time_monte_carlo: u must be > 0");
  const std::vector<double> starts{0.0, u};
  SimOptions options;
  options.bridge_correction = bridge_correction;
  options.truncate_after_coalescence = true;
  const auto table = run_replicas(n_paths, seed, workers, [&](std::size_t, GaussianStream& stream) {
    const auto streams = particle_streams(stream, 2);
    const auto sample = simulate_flow(std::span<const double>(starts), grid, streams, options);
    return std::vector<double>{grid.time(sample.left_meeting_index(1))};
  });
  return estimate(table.column(0));
}

RateProbeResult rate_constant_probe(double U, const Integrand& integrand, std::span<const double> meshes,
                                    std::size_t n_paths, std::uint64_t seed, const TimeGrid& grid, unsigned workers,
                                    SimOptions options) {
  if (meshes.size() < 4) throw InvalidArgument("rate_constant_probe: need at least 4 mesh levels");
  std::vector<Partition> schedule;
  for (double mesh : meshes) {
    if (!(mesh > 0.0)) throw InvalidArgument("rate_constant_probe: meshes must be > 0");
    const int intervals = static_cast<int>(std::lround(U / mesh));
    if (intervals < 1 || std::fabs(U / intervals - mesh) > 1e-9 * mesh) {
      throw InvalidArgument("rate_constant_probe: each mesh must divide U");
    }
    schedule.push_back(Partition::uniform(U, intervals));
  }
  validate_schedule(schedule);

  const std::size_t levels = schedule.size();
  const auto table = run_replicas(n_paths, seed, workers, [&](std::size_t, GaussianStream& stream) {
    const auto streams = particle_streams(stream, schedule.back().size());
    const auto sample = simulate_flow(schedule.back(), grid, streams, options);
    std::vector<double> s_bar(levels);
    for (std::size_t l = 0; l < levels; ++l) {
      s_bar[l] = partition_sum(restrict_to_subpartition(sample, schedule[l]), integrand).s_bar_pi;
    }
    return s_bar;
  });

  RateProbeResult result;
  const auto finest = table.column(levels - 1);
  std::vector<double> fit_meshes, fit_gaps;
  for (std::size_t l = 0; l < levels; ++l) {
    const auto column = table.column(l);
    RateProbeLevel level{schedule[l].mesh(), estimate(column), paired_difference(finest, column)};
    if (l + 1 < levels) {
      fit_meshes.push_back(level.mesh);
      fit_gaps.push_back(std::fabs(level.gap_to_finest.mean));
    }
    result.levels.push_back(level);
  }
  result.degenerate = std::any_of(fit_gaps.begin(), fit_gaps.end(), [](double g) { return !(g > 0.0); });
  if (!result.degenerate) {
    result.fit = loglog_slope(fit_meshes, fit_gaps);
    result.slope = result.fit.slope;
    result.C = std::exp(result.fit.intercept);
  }
  return result;
}

}  // namespace arratia
