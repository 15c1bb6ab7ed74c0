#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "arratia/flow_sim.hpp"

namespace arratia {

/// Bounded measurable function a: R -> R with a declared bound on |a|.
class Integrand {
 public:
  Integrand(std::string name, std::function<double(double)> eval, double sup_bound);

  static Integrand constant(double value);
  static Integrand cosine();
  static Integrand hyperbolic_tangent();

  double operator()(double x) const { return constant_ ? *constant_ : eval_(x); }
  double sup_bound() const { return sup_bound_; }
  const std::string& name() const { return name_; }
  /// Set for integrands built with constant(); enables telescoping shortcuts.
  const std::optional<double>& constant_value() const { return constant_; }
  Integrand scaled(double factor) const;

 private:
  std::string name_;
  std::function<double(double)> eval_;
  double sup_bound_;
  std::optional<double> constant_;
};

struct PartitionSums {
  double s_pi = 0.0;
  double s_bar_pi = 0.0;
  /// Entry j - 1 holds particle j's stopped integral (j = 1..n).
  std::vector<double> stochastic_terms;
  std::vector<double> quadratic_terms;
};

struct RefinementLevel {
  double mesh;
  double s_pi;
  double s_bar_pi;
};

struct SpatialIntegralEstimate {
  double value = 0.0;
  std::vector<RefinementLevel> trace;
};

struct DecompositionTerms {
  double series_sum;
  double m_plus_boundary;
  double residual;
};

/// sum_{i < stop} a(x_i) (x_{i+1} - x_i), the left-point rule.
double ito_integral_stopped(std::span<const double> path, const Integrand& integrand, int stop_index);
/// sum_{i < stop} a(x_i)^2 dt.
double quadratic_integral_stopped(std::span<const double> path, const Integrand& integrand, int stop_index,
                                  double dt);

/// S_pi and S-bar_pi over the view's particles, each stopped at its left
/// meeting time within the view.
PartitionSums partition_sum(const FlowView& view, const Integrand& integrand);
PartitionSums partition_sum(const FlowSample& sample, const Integrand& integrand);

/// S-bar(coarse + with_point) - S-bar(coarse) on one coupled sample.
double refinement_increment(const FlowSample& sample, const Partition& coarse, double with_point,
                            const Integrand& integrand);

/// Sums along a nested schedule (coarsest first) on an existing sample of
/// the finest partition.
SpatialIntegralEstimate spatial_integral_on(const FlowSample& finest_sample, std::span<const Partition> schedule,
                                            const Integrand& integrand);
/// Simulates the finest partition once and evaluates every level on it.
SpatialIntegralEstimate spatial_integral(std::span<const Partition> schedule, const TimeGrid& grid,
                                         const Integrand& integrand, std::span<const GaussianStream> streams,
                                         SimOptions options = {});

/// Checks that schedule is strictly nested with decreasing mesh.
void validate_schedule(std::span<const Partition> schedule);

/// Series sum_k int_0^{tau_k} a dx(u_k), tau_k the first meeting with any
/// earlier particle of `sequence_order` (tau = 1 for the first), against
/// S_pi + int_0^1 a(x(0,t)) dx(0,t). sequence_order must start with the
/// particle at 0; the single-argument form uses increasing order.
DecompositionTerms lemma31_decomposition(const FlowSample& sample, const Integrand& integrand);
DecompositionTerms lemma31_decomposition(const FlowSample& sample, const Integrand& integrand,
                                   std::span<const int> sequence_order);

}  // namespace arratia
