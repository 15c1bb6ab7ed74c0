#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "arratia/gauss_rng.hpp"

namespace arratia {

struct EstimatorResult {
  std::size_t n = 0;
  double mean = 0.0;
  double std_error = 0.0;
  std::pair<double, double> ci95{0.0, 0.0};
};

struct RateFitResult {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  std::size_t points = 0;
};

struct OrthogonalityResult {
  double z = 0.0;
  bool degenerate = false;
  EstimatorResult product;
};

/// Row-major table of per-replica outputs: row i belongs to replica i.
class ReplicaTable {
 public:
  ReplicaTable(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double& at(std::size_t row, std::size_t col) { return data_[row * cols_ + col]; }
  double at(std::size_t row, std::size_t col) const { return data_[row * cols_ + col]; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
  std::vector<double> column(std::size_t col) const;

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<double> data_;
};

/// Replica function: receives its index and make_stream(seed, index), returns
/// a fixed number of outputs.
using ReplicaFn = std::function<std::vector<double>(std::size_t replica, GaussianStream& stream)>;

/// Evaluates n replicas on up to `workers` threads. Output depends only on
/// (n, seed, fn), never on the worker count.
ReplicaTable run_replicas(std::size_t n, std::uint64_t seed, unsigned workers, const ReplicaFn& fn);

/// Mean, unbiased-variance standard error and normal 95% interval.
EstimatorResult estimate(std::span<const double> values);

EstimatorResult mc_estimate(const std::function<double(GaussianStream&)>& sampler, std::size_t n,
                            std::uint64_t seed, unsigned workers = 1);

/// Paired estimate of mean(a - b).
EstimatorResult paired_difference(std::span<const double> a, std::span<const double> b);

/// z = mean(increment * g) / stderr(increment * g) for each statistic g.
std::vector<OrthogonalityResult> orthogonality_test(std::span<const double> increments,
                                                    const std::vector<std::vector<double>>& statistics);

/// Least squares of log(gap) on log(mesh).
RateFitResult loglog_slope(std::span<const double> meshes, std::span<const double> gaps);

/// Kolmogorov-Smirnov D for a sample against a continuous CDF.
double ks_statistic(std::vector<double> values, const std::function<double(double)>& cdf);
/// Two-sample Kolmogorov-Smirnov D (ties handled by joint jumps).
double ks_two_sample_statistic(std::vector<double> a, std::vector<double> b);
/// Asymptotic critical value c(alpha) with D_crit = c / sqrt(n_eff).
double ks_critical_coefficient(double alpha);

}  // namespace arratia
