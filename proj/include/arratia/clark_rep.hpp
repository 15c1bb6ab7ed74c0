#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "arratia/flow_sim.hpp"
#include "arratia/mc_stats.hpp"
#include "arratia/stochastic_integrals.hpp"

namespace arratia {

/// The part of a FlowSample observable at time index `now`. Any read of a
/// later index throws ContractViolation, which is how adaptedness of
/// integrands is enforced.
class PathPrefix {
 public:
  PathPrefix(const FlowSample& sample, int now);

  int now() const { return now_; }
  double time() const { return sample_->grid().time(now_); }
  double dt() const { return sample_->grid().dt(); }
  std::size_t particle_count() const { return sample_->particle_count(); }
  double start(std::size_t k) const { return sample_->start(k); }

  double position(std::size_t k, int i) const;
  double current(std::size_t k) const { return sample_->position(k, now_); }
  int cluster_label(std::size_t k, int i) const;
  bool coalesced(std::size_t j, std::size_t k) const { return sample_->same_cluster(j, k, now_); }

 private:
  void check(int i) const;

  const FlowSample* sample_;
  int now_;
};

/// Square-integrable functional of a flow sample.
struct Functional {
  std::string name;
  std::function<double(const FlowSample&)> eval;
  std::optional<double> mean;
};

using AdaptedIntegrand = std::function<double(const PathPrefix&)>;

/// Integrands f_k attached to particles in sequence order. The particle
/// order[0] integrates up to the horizon; order[p] stops at its first
/// meeting with any of order[0..p).
struct IntegrandFamily {
  std::string name;
  std::vector<int> order;
  std::vector<AdaptedIntegrand> integrands;
};

/// A functional with its known representation.
struct Representation {
  Functional functional;
  IntegrandFamily family;
  double mean;
};

/// Per-path pieces: alpha, and per family position the stopped integral and
/// the time integral of f^2.
struct PathDecomposition {
  double alpha = 0.0;
  std::vector<int> stop_index;
  std::vector<double> integrals;
  std::vector<double> energies;
};

PathDecomposition decompose_path(const FlowSample& sample, const Functional& functional,
                                 const IntegrandFamily& family);

struct ParticleSummary {
  int particle = 0;
  EstimatorResult integral;
  EstimatorResult energy;
};

struct RepresentationReport {
  std::string functional;
  std::size_t n_paths = 0;
  double mean = 0.0;
  std::vector<double> residuals;
  double max_abs_residual = 0.0;
  double mean_abs_residual = 0.0;
  double energy_lhs = 0.0;
  double energy_rhs = 0.0;
  double energy_lhs_std_error = 0.0;
  double energy_rhs_std_error = 0.0;
  double z_score = 0.0;
  std::vector<ParticleSummary> per_k;
};

/// Residual alpha - (mean + sum_k int_0^{tau_k} f_k dx(u_k)) on every path,
/// plus the energy pair.
RepresentationReport verify_representation(const FlowEnsemble& samples, const Functional& functional,
                                           const IntegrandFamily& family, double mean, unsigned workers = 1);

struct EnergyCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  double lhs_std_error = 0.0;
  double rhs_std_error = 0.0;
  /// Paired z-score of mean(alpha^2 - mean^2 - sum_k int f_k^2 dt).
  double z_score = 0.0;
};

/// E alpha^2 against (E alpha)^2 + sum_k E int_0^{tau_k} f_k^2 dt.
EnergyCheck energy_identity_check(const FlowEnsemble& samples, const Functional& functional,
                                  const IntegrandFamily& family, double mean, unsigned workers = 1);

using StateFunction = std::function<double(const PathPrefix&)>;

struct RegressionResult {
  std::vector<double> coefficients;
  std::vector<double> std_errors;
  double residual_variance = 0.0;
  double condition_number = 0.0;
  std::size_t n = 0;
};

/// Numerical recovery of f_k at one time index: least-squares projection of
/// alpha * (x_k(i+1) - x_k(i)) / dt onto basis functions of the prefix at i.
/// Throws DegenerateRegression when the design condition number exceeds 1e10.
RegressionResult estimate_integrand_regression(const FlowEnsemble& samples, const Functional& functional,
                                               std::size_t particle, int time_index,
                                               const std::vector<StateFunction>& basis, unsigned workers = 1);

struct SeriesPoint {
  int N = 0;
  EstimatorResult l2_error;
  /// Paired estimate of l2_error(N) - l2_error(previous N); empty for the first.
  std::optional<EstimatorResult> change;
};

/// L2 error of alpha - (mean + sum_{p <= N} int_0^{tau_p} f_p dx) for each N.
std::vector<SeriesPoint> truncated_series_representation(const FlowEnsemble& samples, const Functional& functional,
                                                         const IntegrandFamily& family, double mean,
                                                         std::span<const int> truncations, unsigned workers = 1);

/// 0, U, then U(2j+1)/2^d for d = 1..depth in increasing j.
std::vector<double> dyadic_dense_sequence(double U, int depth);
/// Index in `sorted_starts` of each point of `sequence`.
std::vector<int> sequence_order(std::span<const double> sorted_starts, std::span<const double> sequence);

namespace families {

/// alpha = x(u, 1) with a single particle; f = 1.
Representation single_particle_endpoint(double u);

/// alpha = x(order[1], 1). The particle order[1] uses f = 1 until it meets
/// order[0]; order[0] uses f = 1 from that meeting on; everything else 0.
Representation endpoint_after_coalescence(std::span<const double> starts, std::vector<int> order);

/// alpha = x(u, 1)^2 with a single particle; f = 2 x(t), mean u^2 + 1.
/// The discrete residual is sum (dx)^2 - 1, small but not zero.
Representation endpoint_square(double u);

Representation constant(double c, std::size_t particle_count);

/// alpha = sum_p int_0^{tau_p} a(x(order[p], t)) dx(order[p], t); f_p = a.
Representation stopped_integral_series(const Integrand& a, std::vector<int> order);

}  // namespace families

}  // namespace arratia
