#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "arratia/flow_sim.hpp"
#include "arratia/mc_stats.hpp"
#include "arratia/stochastic_integrals.hpp"

namespace arratia {

/// Variance rate of the gap between two independent standard Wiener processes.
inline constexpr double kGapVarianceRate = 2.0;

/// E(tau ^ 1) for two independent Wiener particles started u apart:
/// integral over t in [0, 1] of P(|N(0, 2t)| < u) = erf(u / (2 sqrt t)).
double meeting_time_mean_quadrature(double u);

/// The printed two-term formula, read with an outer dt on the first term:
/// int_0^1 int_{-u}^{u} p_{2t}(v) dv dt + int_{-u}^{u} p_2(v) dv.
double meeting_time_mean_two_term_formula(double u);

struct SmallGapSlope {
  /// Least-squares slope through the origin of the quadrature means.
  double fitted_slope;
  /// 3 / (2 sqrt(pi)), the constant quoted for the small-gap asymptotics.
  double paper_slope;
  /// 2 / sqrt(pi), the exact small-gap slope of the survival integral.
  double limit_slope;
};

/// u_grid must lie in (0, 0.05] and hold at least 4 points.
SmallGapSlope small_u_slope(std::span<const double> u_grid);

/// Least-squares slope through the origin of y against x.
double slope_through_origin(std::span<const double> x, std::span<const double> y);

/// E(zeta ^ 1) for independent Wiener coordinates with the given variance
/// rates started at (r1, r2), zeta the first time either hits 0. Product-form
/// survival: erf(r1 / sqrt(2 v1 t)) * erf(r2 / sqrt(2 v2 t)).
double quadrant_exit_mean_quadrature(double r1, double r2, double var_rate1 = 1.0, double var_rate2 = 1.0);

/// Upper bound on E(zeta ^ 1) for a middle particle started left_gap and
/// right_gap from its neighbors, zeta its first meeting with either one.
/// The two gaps have rate 2 and covariance rate -1; the wedge they must
/// leave sits inside a quadrant of independent coordinates, one of them the
/// gap itself, the other the opposite gap plus half of it (rate 3/2).
double wedge_exit_bound(double left_gap, double right_gap);

struct AngleExitResult {
  double r1 = 0.0;
  double r2 = 0.0;
  double mean_exit = 0.0;
  double std_error = 0.0;
  double ratio = 0.0;
};

/// Monte Carlo E(zeta ^ 1) for a planar standard Wiener process from
/// (r1, r2), zeta the first hit of either axis (bridge-corrected).
AngleExitResult angle_exit_bound_experiment(double r1, double r2, const TimeGrid& grid, std::size_t n_paths,
                                            std::uint64_t seed, unsigned workers = 1);

/// Monte Carlo E(tau ^ 1) for two coalescing particles started u apart.
EstimatorResult meeting_time_monte_carlo(double u, const TimeGrid& grid, std::size_t n_paths, std::uint64_t seed,
                                         unsigned workers = 1, bool bridge_correction = true);

struct RateProbeLevel {
  double mesh;
  EstimatorResult s_bar;
  /// Paired estimate of mean S-bar(finest) - mean S-bar(level).
  EstimatorResult gap_to_finest;
};

struct RateProbeResult {
  std::vector<RateProbeLevel> levels;
  RateFitResult fit;
  /// Prefactor in gap ~ C * mesh^slope.
  double C = 0.0;
  double slope = 0.0;
  /// All gaps vanish (e.g. a = 0); no fit is possible.
  bool degenerate = false;
};

/// Fits |mean S-bar(mesh) - mean S-bar(finest)| against mesh over every
/// mesh but the finest, which stands in for the limit. Meshes must be
/// decreasing, give nested uniform partitions of [0, U], and number >= 4.
RateProbeResult rate_constant_probe(double U, const Integrand& integrand, std::span<const double> meshes,
                                    std::size_t n_paths, std::uint64_t seed, const TimeGrid& grid = TimeGrid(),
                                    unsigned workers = 1, SimOptions options = {});

}  // namespace arratia
