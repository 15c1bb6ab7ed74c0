#include "arratia/clark_rep.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "arratia/errors.hpp"

namespace arratia {

PathPrefix::PathPrefix(const FlowSample& sample, int now) : sample_(&sample), now_(now) {
  if (now < 0 || now > sample.valid_through()) throw InvalidArgument("PathPrefix: time index out of range");
}

void PathPrefix::check(int i) const {
  if (i > now_) {
    throw ContractViolation("adapted integrand read index " + std::to_string(i) + " at time index " +
                            std::to_string(now_));
  }
  if (i < 0) throw InvalidArgument("PathPrefix: negative time index");
}

double PathPrefix::position(std::size_t k, int i) const {
  check(i);
  return sample_->position(k, i);
}

int PathPrefix::cluster_label(std::size_t k, int i) const {
  check(i);
  return sample_->cluster_label(k, i);
}

namespace {

void validate_family(const FlowSample& sample, const IntegrandFamily& family) {
  if (family.order.size() != family.integrands.size()) {
    throw InvalidArgument("IntegrandFamily: order and integrands differ in length");
  }
  std::vector<bool> seen(sample.particle_count(), false);
  for (int k : family.order) {
    if (k < 0 || static_cast<std::size_t>(k) >= sample.particle_count() || seen[k]) {
      throw InvalidArgument("IntegrandFamily: order must list distinct particles of the sample");
    }
    seen[k] = true;
  }
}

std::vector<double>& path_buffer(std::size_t size) {
  thread_local std::vector<double> buffer;
  if (buffer.size() < size) buffer.resize(size);
  return buffer;
}

}  // namespace

PathDecomposition decompose_path(const FlowSample& sample, const Functional& functional,
                                 const IntegrandFamily& family) {
  validate_family(sample, family);
  const int horizon = sample.grid().n_steps();
  const double dt = sample.grid().dt();
  PathDecomposition out;
  out.alpha = functional.eval(sample);
  const std::span<const int> order(family.order);
  for (std::size_t p = 0; p < order.size(); ++p) {
    const auto k = static_cast<std::size_t>(order[p]);
    const int stop = p == 0 ? horizon : sample.first_meeting_with_any(k, order.subspan(0, p));
    auto& path = path_buffer(static_cast<std::size_t>(stop) + 1);
    sample.copy_path(k, stop, path);
    double integral = 0.0, energy = 0.0;
    const auto& f = family.integrands[p];
    for (int i = 0; i < stop; ++i) {
      const double v = f(PathPrefix(sample, i));
      integral += v * (path[i + 1] - path[i]);
      energy += v * v;
    }
    out.stop_index.push_back(stop);
    out.integrals.push_back(integral);
    out.energies.push_back(energy * dt);
  }
  return out;
}

namespace {

// Columns: alpha, then (integral, energy) per family position.
ReplicaTable decompose_ensemble(const FlowEnsemble& samples, const Functional& functional,
                                const IntegrandFamily& family, unsigned workers) {
  return run_replicas(samples.size(), samples.seed(), workers, [&](std::size_t replica, GaussianStream&) {
    const auto d = decompose_path(samples.sample(replica), functional, family);
    std::vector<double> row{d.alpha};
    for (std::size_t p = 0; p < d.integrals.size(); ++p) {
      row.push_back(d.integrals[p]);
      row.push_back(d.energies[p]);
    }
    return row;
  });
}

EnergyCheck energy_from_table(const ReplicaTable& table, std::size_t terms, double mean) {
  const std::size_t n = table.rows();
  std::vector<double> lhs(n), rhs(n), diff(n);
  for (std::size_t r = 0; r < n; ++r) {
    const double alpha = table.at(r, 0);
    double energy = 0.0;
    for (std::size_t p = 0; p < terms; ++p) energy += table.at(r, 2 + 2 * p);
    lhs[r] = alpha * alpha;
    rhs[r] = mean * mean + energy;
    diff[r] = lhs[r] - rhs[r];
  }
  const auto l = estimate(lhs);
  const auto h = estimate(rhs);
  const auto d = estimate(diff);
  EnergyCheck out{l.mean, h.mean, l.std_error, h.std_error, 0.0};
  out.z_score = d.std_error > 0.0 ? d.mean / d.std_error : (d.mean == 0.0 ? 0.0 : std::copysign(INFINITY, d.mean));
  return out;
}

}  // namespace

RepresentationReport verify_representation(const FlowEnsemble& samples, const Functional& functional,
                                           const IntegrandFamily& family, double mean, unsigned workers) {
  if (samples.size() < 2) throw InvalidArgument("verify_representation: need at least 2 paths");
  const auto table = decompose_ensemble(samples, functional, family, workers);
  const std::size_t terms = family.order.size();
  RepresentationReport report;
  report.functional = functional.name;
  report.n_paths = table.rows();
  report.mean = mean;
  report.residuals.resize(table.rows());
  double abs_sum = 0.0;
  for (std::size_t r = 0; r < table.rows(); ++r) {
    double reconstruction = mean;
    for (std::size_t p = 0; p < terms; ++p) reconstruction += table.at(r, 1 + 2 * p);
    const double residual = table.at(r, 0) - reconstruction;
    report.residuals[r] = residual;
    report.max_abs_residual = std::max(report.max_abs_residual, std::fabs(residual));
    abs_sum += std::fabs(residual);
  }
  report.mean_abs_residual = abs_sum / static_cast<double>(table.rows());
  const auto energy = energy_from_table(table, terms, mean);
  report.energy_lhs = energy.lhs;
  report.energy_rhs = energy.rhs;
  report.energy_lhs_std_error = energy.lhs_std_error;
  report.energy_rhs_std_error = energy.rhs_std_error;
  report.z_score = energy.z_score;
  for (std::size_t p = 0; p < terms; ++p) {
    report.per_k.push_back(
        {family.order[p], estimate(table.column(1 + 2 * p)), estimate(table.column(2 + 2 * p))});
  }
  return report;
}

EnergyCheck energy_identity_check(const FlowEnsemble& samples, const Functional& functional,
                                  const IntegrandFamily& family, double mean, unsigned workers) {
  if (samples.size() < 2) throw InvalidArgument("energy_identity_check: need at least 2 paths");
  const auto table = decompose_ensemble(samples, functional, family, workers);
  return energy_from_table(table, family.order.size(), mean);
}

RegressionResult estimate_integrand_regression(const FlowEnsemble& samples, const Functional& functional,
                                               std::size_t particle, int time_index,
                                               const std::vector<StateFunction>& basis, unsigned workers) {
  if (basis.empty()) throw InvalidArgument("estimate_integrand_regression: empty basis");
  if (particle >= samples.starts().size()) throw InvalidArgument("estimate_integrand_regression: bad particle");
  if (time_index < 0 || time_index >= samples.grid().n_steps()) {
    throw InvalidArgument("estimate_integrand_regression: time_index must lie in [0, n_steps)");
  }
  const std::size_t m = basis.size();
  if (samples.size() <= m) throw InvalidArgument("estimate_integrand_regression: too few paths");
  const double dt = samples.grid().dt();
  const auto table = run_replicas(samples.size(), samples.seed(), workers, [&](std::size_t replica, GaussianStream&) {
    const auto sample = samples.sample(replica);
    const PathPrefix prefix(sample, time_index);
    const double increment = sample.position(particle, time_index + 1) - sample.position(particle, time_index);
    std::vector<double> row{functional.eval(sample) * increment / dt};
    for (const auto& b : basis) row.push_back(b(prefix));
    return row;
  });

  const auto n = static_cast<Eigen::Index>(table.rows());
  Eigen::MatrixXd X(n, static_cast<Eigen::Index>(m));
  Eigen::VectorXd y(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    y(r) = table.at(r, 0);
    for (std::size_t c = 0; c < m; ++c) X(r, static_cast<Eigen::Index>(c)) = table.at(r, 1 + c);
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(X, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const double smax = sv(0), smin = sv(sv.size() - 1);
  const double condition = smin > 0.0 ? smax / smin : INFINITY;
  if (!(condition <= 1e10)) {
    throw DegenerateRegression("estimate_integrand_regression: singular design (condition number " +
                                   std::to_string(condition) + ")",
                               condition);
  }
  const Eigen::VectorXd beta = svd.solve(y);
  const Eigen::VectorXd residual = y - X * beta;
  const double sigma2 = residual.squaredNorm() / static_cast<double>(n - static_cast<Eigen::Index>(m));
  const Eigen::MatrixXd V = svd.matrixV();
  const Eigen::VectorXd inv_s2 = sv.array().square().inverse();
  const Eigen::MatrixXd cov = sigma2 * V * inv_s2.asDiagonal() * V.transpose();

  RegressionResult out;
  out.n = table.rows();
  out.residual_variance = sigma2;
  out.condition_number = condition;
  for (std::size_t c = 0; c < m; ++c) {
    const auto i = static_cast<Eigen::Index>(c);
    out.coefficients.push_back(beta(i));
    out.std_errors.push_back(std::sqrt(cov(i, i)));
  }
  return out;
}

std::vector<SeriesPoint> truncated_series_representation(const FlowEnsemble& samples, const Functional& functional,
                                                         const IntegrandFamily& family, double mean,
                                                         std::span<const int> truncations, unsigned workers) {
  if (truncations.empty()) throw InvalidArgument("truncated_series_representation: no truncation levels");
  for (int N : truncations) {
    if (N < 0) throw InvalidArgument("truncated_series_representation: N must be >= 0");
  }
  const auto table = decompose_ensemble(samples, functional, family, workers);
  const std::size_t terms = family.order.size();
  const std::size_t n = table.rows();
  std::vector<std::vector<double>> errors(truncations.size(), std::vector<double>(n));
  for (std::size_t r = 0; r < n; ++r) {
    // Partial sums in sequence order; N beyond the family reuses the full sum.
    std::vector<double> partial(terms + 1, mean);
    for (std::size_t p = 0; p < terms; ++p) partial[p + 1] = partial[p] + table.at(r, 1 + 2 * p);
    for (std::size_t t = 0; t < truncations.size(); ++t) {
      const std::size_t used = std::min<std::size_t>(static_cast<std::size_t>(truncations[t]) + 1, terms);
      const double e = table.at(r, 0) - partial[used];
      errors[t][r] = e * e;
    }
  }
  std::vector<SeriesPoint> out;
  for (std::size_t t = 0; t < truncations.size(); ++t) {
    SeriesPoint point;
    point.N = truncations[t];
    point.l2_error = estimate(errors[t]);
    if (t > 0) point.change = paired_difference(errors[t], errors[t - 1]);
    out.push_back(point);
  }
  return out;
}

std::vector<double> dyadic_dense_sequence(double U, int depth) {
  if (!(U > 0.0)) throw InvalidArgument("dyadic_dense_sequence: U must be > 0");
  if (depth < 0 || depth > 20) throw InvalidArgument("dyadic_dense_sequence: depth must be in [0, 20]");
  std::vector<double> out{0.0, U};
  for (int d = 1; d <= depth; ++d) {
    const int denom = 1 << d;
    for (int j = 1; j < denom; j += 2) out.push_back(U * j / denom);
  }
  return out;
}

std::vector<int> sequence_order(std::span<const double> sorted_starts, std::span<const double> sequence) {
  const Partition sorted(std::vector<double>(sorted_starts.begin(), sorted_starts.end()));
  std::vector<int> out;
  for (double u : sequence) {
    const int k = sorted.index_of(u);
    if (k < 0) throw InvalidArgument("sequence_order: point not among the starts");
    if (std::find(out.begin(), out.end(), k) != out.end()) throw InvalidArgument("sequence_order: repeated point");
    out.push_back(k);
  }
  return out;
}

namespace families {

namespace {

AdaptedIntegrand constant_integrand(double c) {
  return [c](const PathPrefix&) { return c; };
}

}  // namespace

Representation single_particle_endpoint(double u) {
  Functional f{"endpoint", [](const FlowSample& s) { return s.position(0, s.grid().n_steps()); }, u};
  IntegrandFamily fam{"unit", {0}, {constant_integrand(1.0)}};
  return {f, fam, u};
}

Representation endpoint_after_coalescence(std::span<const double> starts, std::vector<int> order) {
  if (order.size() < 2 || order.size() != starts.size()) {
    throw InvalidArgument("endpoint_after_coalescence: order must list every particle, at least two");
  }
  const auto lower = static_cast<std::size_t>(order[0]);
  const auto upper = static_cast<std::size_t>(order[1]);
  Functional f{"endpoint_after_coalescence",
               [upper](const FlowSample& s) { return s.position(upper, s.grid().n_steps()); }, starts[upper]};
  IntegrandFamily fam;
  fam.name = "switch_at_meeting";
  fam.order = std::move(order);
  fam.integrands.push_back(
      [lower, upper](const PathPrefix& p) { return p.coalesced(lower, upper) ? 1.0 : 0.0; });
  fam.integrands.push_back(constant_integrand(1.0));
  for (std::size_t p = 2; p < fam.order.size(); ++p) fam.integrands.push_back(constant_integrand(0.0));
  return {f, fam, starts[upper]};
}

Representation endpoint_square(double u) {
  Functional f{"endpoint_square",
               [](const FlowSample& s) {
                 const double x = s.position(0, s.grid().n_steps());
                 return x * x;
               },
               u * u + 1.0};
  IntegrandFamily fam{"twice_position", {0}, {[](const PathPrefix& p) { return 2.0 * p.current(0); }}};
  return {f, fam, u * u + 1.0};
}

Representation constant(double c, std::size_t particle_count) {
  if (particle_count == 0) throw InvalidArgument("families::constant: need at least one particle");
  Functional f{"constant", [c](const FlowSample&) { return c; }, c};
  IntegrandFamily fam{"zero", {}, {}};
  for (std::size_t k = 0; k < particle_count; ++k) {
    fam.order.push_back(static_cast<int>(k));
    fam.integrands.push_back(constant_integrand(0.0));
  }
  return {f, fam, c};
}

Representation stopped_integral_series(const Integrand& a, std::vector<int> order) {
  if (order.empty()) throw InvalidArgument("stopped_integral_series: empty order");
  IntegrandFamily fam;
  fam.name = "integrand_" + a.name();
  fam.order = order;
  for (int k : order) {
    const auto particle = static_cast<std::size_t>(k);
    fam.integrands.push_back([a, particle](const PathPrefix& p) { return a(p.current(particle)); });
  }
  Functional f{"stopped_integral_series_" + a.name(),
               [fam](const FlowSample& s) {
                 const Functional none{"", [](const FlowSample&) { return 0.0; }, std::nullopt};
                 const auto d = decompose_path(s, none, fam);
                 return std::accumulate(d.integrals.begin(), d.integrals.end(), 0.0);
               },
               0.0};
  return {f, fam, 0.0};
}

}  // namespace families

}  // namespace arratia
