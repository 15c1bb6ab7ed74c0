#include "arratia/stochastic_integrals.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "arratia/errors.hpp"

namespace arratia {

Integrand::Integrand(std::string name, std::function<double(double)> eval, double sup_bound)
    : name_(std::move(name)), eval_(std::move(eval)), sup_bound_(sup_bound) {
  if (!eval_) throw InvalidArgument("Integrand: empty function");
  if (!(sup_bound >= 0.0) || !std::isfinite(sup_bound)) throw InvalidArgument("Integrand: sup_bound must be finite and >= 0");
}

Integrand Integrand::constant(double value) {
  Integrand a(value == 1.0 ? "one" : (value == 0.0 ? "zero" : "constant"), [value](double) { return value; },
              std::fabs(value));
  a.constant_ = value;
  return a;
}

Integrand Integrand::cosine() {
  return Integrand("cos", [](double x) { return std::cos(x); }, 1.0);
}

Integrand Integrand::hyperbolic_tangent() {
  return Integrand("tanh", [](double x) { return std::tanh(x); }, 1.0);
}

Integrand Integrand::scaled(double factor) const {
  if (constant_) {
    Integrand a = constant(*constant_ * factor);
    return a;
  }
  auto inner = eval_;
  return Integrand(name_ + "*" + std::to_string(factor), [inner, factor](double x) { return factor * inner(x); },
                   std::fabs(factor) * sup_bound_);
}

double ito_integral_stopped(std::span<const double> path, const Integrand& integrand, int stop_index) {
  if (stop_index < 0 || static_cast<std::size_t>(stop_index) >= path.size()) {
    throw InvalidArgument("ito_integral_stopped: stop_index out of range");
  }
  if (const auto& c = integrand.constant_value()) return *c * (path[stop_index] - path[0]);
  double sum = 0.0;
  for (int i = 0; i < stop_index; ++i) sum += integrand(path[i]) * (path[i + 1] - path[i]);
  return sum;
}

double quadratic_integral_stopped(std::span<const double> path, const Integrand& integrand, int stop_index,
                                  double dt) {
  if (stop_index < 0 || static_cast<std::size_t>(stop_index) >= path.size()) {
    throw InvalidArgument("quadratic_integral_stopped: stop_index out of range");
  }
  if (const auto& c = integrand.constant_value()) return *c * *c * stop_index * dt;
  double sum = 0.0;
  for (int i = 0; i < stop_index; ++i) {
    const double v = integrand(path[i]);
    sum += v * v;
  }
  return sum * dt;
}

namespace {

std::vector<double>& scratch(std::size_t size) {
  thread_local std::vector<double> buffer;
  if (buffer.size() < size) buffer.resize(size);
  return buffer;
}

double stopped_ito(const FlowSample& sample, std::size_t k, int stop, const Integrand& a) {
  if (const auto& c = a.constant_value()) return *c * (sample.position(k, stop) - sample.start(k));
  auto& buf = scratch(static_cast<std::size_t>(stop) + 1);
  sample.copy_path(k, stop, buf);
  return ito_integral_stopped(std::span<const double>(buf.data(), stop + 1), a, stop);
}

double stopped_quadratic(const FlowSample& sample, std::size_t k, int stop, const Integrand& a) {
  const double dt = sample.grid().dt();
  if (const auto& c = a.constant_value()) return *c * *c * stop * dt;
  auto& buf = scratch(static_cast<std::size_t>(stop) + 1);
  sample.copy_path(k, stop, buf);
  return quadratic_integral_stopped(std::span<const double>(buf.data(), stop + 1), a, stop, dt);
}

}  // namespace

PartitionSums partition_sum(const FlowView& view, const Integrand& integrand) {
  if (view.particle_count() < 2) throw InvalidArgument("partition_sum: need at least 2 particles");
  const FlowSample& sample = view.sample();
  PartitionSums out;
  out.stochastic_terms.reserve(view.particle_count() - 1);
  out.quadratic_terms.reserve(view.particle_count() - 1);
  for (std::size_t j = 1; j < view.particle_count(); ++j) {
    const int stop = view.left_meeting_index(j);
    const auto k = static_cast<std::size_t>(view.index(j));
    const double s = stopped_ito(sample, k, stop, integrand);
    const double q = stopped_quadratic(sample, k, stop, integrand);
    out.stochastic_terms.push_back(s);
    out.quadratic_terms.push_back(q);
    out.s_pi += s;
    out.s_bar_pi += q;
  }
  return out;
}

PartitionSums partition_sum(const FlowSample& sample, const Integrand& integrand) {
  return partition_sum(FlowView::full(sample), integrand);
}

double refinement_increment(const FlowSample& sample, const Partition& coarse, double with_point,
                            const Integrand& integrand) {
  const Partition all(sample.starts());
  if (!coarse.is_subset_of(all)) throw InvalidArgument("refinement_increment: coarse partition not in sample");
  const int v = all.index_of(with_point);
  if (v < 0) throw InvalidArgument("refinement_increment: with_point not in sample");
  if (coarse.index_of(with_point) >= 0) throw InvalidArgument("refinement_increment: with_point already in coarse");
  const auto& pts = coarse.points();
  auto upper = std::upper_bound(pts.begin(), pts.end(), with_point);
  if (upper == pts.end()) throw InvalidArgument("refinement_increment: with_point outside coarse extent");
  const auto lo = static_cast<std::size_t>(all.index_of(*(upper - 1)));
  const auto hi = static_cast<std::size_t>(all.index_of(*upper));
  const auto mid = static_cast<std::size_t>(v);

  // Only the terms of with_point and of the right endpoint change.
  const double added = stopped_quadratic(sample, mid, sample.pair_meeting_index(lo, mid), integrand) +
                       stopped_quadratic(sample, hi, sample.pair_meeting_index(mid, hi), integrand);
  const double removed = stopped_quadratic(sample, hi, sample.pair_meeting_index(lo, hi), integrand);
  return added - removed;
}

void validate_schedule(std::span<const Partition> schedule) {
  if (schedule.empty()) throw InvalidArgument("spatial_integral: empty schedule");
  for (std::size_t l = 1; l < schedule.size(); ++l) {
    const auto& prev = schedule[l - 1];
    const auto& next = schedule[l];
    if (next.size() <= prev.size() || !prev.is_subset_of(next)) {
      throw InvalidArgument("spatial_integral: schedule must be strictly nested");
    }
    if (std::fabs(next.extent() - prev.extent()) > 1e-12 * std::max(1.0, prev.extent())) {
      throw InvalidArgument("spatial_integral: all levels must share the same extent");
    }
    if (next.mesh() > prev.mesh()) throw InvalidArgument("spatial_integral: mesh must not increase");
  }
}

SpatialIntegralEstimate spatial_integral_on(const FlowSample& finest_sample, std::span<const Partition> schedule,
                                            const Integrand& integrand) {
  validate_schedule(schedule);
  SpatialIntegralEstimate est;
  est.trace.reserve(schedule.size());
  for (const auto& level : schedule) {
    const auto view = restrict_to_subpartition(finest_sample, level);
    const auto sums = partition_sum(view, integrand);
    est.trace.push_back({level.mesh(), sums.s_pi, sums.s_bar_pi});
  }
  est.value = est.trace.back().s_pi;
  return est;
}

SpatialIntegralEstimate spatial_integral(std::span<const Partition> schedule, const TimeGrid& grid,
                                         const Integrand& integrand, std::span<const GaussianStream> streams,
                                         SimOptions options) {
  validate_schedule(schedule);
  const auto sample = simulate_flow(schedule.back(), grid, streams, options);
  return spatial_integral_on(sample, schedule, integrand);
}

DecompositionTerms lemma31_decomposition(const FlowSample& sample, const Integrand& integrand) {
  std::vector<int> order(sample.particle_count());
  std::iota(order.begin(), order.end(), 0);
  return lemma31_decomposition(sample, integrand, order);
}

DecompositionTerms lemma31_decomposition(const FlowSample& sample, const Integrand& integrand,
                                   std::span<const int> sequence_order) {
  const std::size_t n = sample.particle_count();
  if (sample.start(0) != 0.0) throw InvalidArgument("lemma31_decomposition: u_0 must be 0");
  if (sequence_order.size() != n) throw InvalidArgument("lemma31_decomposition: order must list every particle");
  std::vector<bool> seen(n, false);
  for (int k : sequence_order) {
    if (k < 0 || static_cast<std::size_t>(k) >= n || seen[k]) {
      throw InvalidArgument("lemma31_decomposition: order must be a permutation");
    }
    seen[k] = true;
  }
  if (sequence_order[0] != 0) throw InvalidArgument("lemma31_decomposition: order must start at u_0 = 0");

  const int horizon = sample.grid().n_steps();
  double series = 0.0;
  for (std::size_t pos = 0; pos < n; ++pos) {
    const auto k = static_cast<std::size_t>(sequence_order[pos]);
    const int stop = pos == 0 ? horizon : sample.first_meeting_with_any(k, sequence_order.subspan(0, pos));
    series += stopped_ito(sample, k, stop, integrand);
  }
  const double boundary = stopped_ito(sample, 0, horizon, integrand);
  const double s_pi = n >= 2 ? partition_sum(sample, integrand).s_pi : 0.0;
  const double rhs = s_pi + boundary;
  return {series, rhs, series - rhs};
}

}  // namespace arratia
