#include "arratia/mc_stats.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "arratia/errors.hpp"

namespace arratia {

std::vector<double> ReplicaTable::column(std::size_t col) const {
  std::vector<double> out(rows_);
  for (std::size_t r = 0; r < rows_; ++r) out[r] = data_[r * cols_ + col];
  return out;
}

ReplicaTable run_replicas(std::size_t n, std::uint64_t seed, unsigned workers, const ReplicaFn& fn) {
  if (n == 0) throw InvalidArgument("run_replicas: n must be >= 1");
  // Replica 0 fixes the column count.
  auto first_stream = make_stream(seed, 0);
  const auto first = fn(0, first_stream);
  ReplicaTable table(n, first.size());
  std::copy(first.begin(), first.end(), &table.at(0, 0));

  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&](std::size_t begin, std::size_t end) {
    try {
      for (std::size_t i = begin; i < end; ++i) {
        auto stream = make_stream(seed, i);
        const auto values = fn(i, stream);
        if (values.size() != table.cols()) throw InvalidArgument("run_replicas: replica output size changed");
        std::copy(values.begin(), values.end(), &table.at(i, 0));
      }
    } catch (...) {
      std::lock_guard lock(failure_mutex);
      if (!failure) failure = std::current_exception();
    }
  };

  const std::size_t threads = std::max<std::size_t>(1, std::min<std::size_t>(workers, n > 1 ? n - 1 : 1));
  if (threads == 1) {
    work(1, n);
  } else {
    std::vector<std::jthread> pool;
    const std::size_t span = n - 1;
    for (std::size_t t = 0; t < threads; ++t) {
      const std::size_t begin = 1 + span * t / threads;
      const std::size_t end = 1 + span * (t + 1) / threads;
      pool.emplace_back(work, begin, end);
    }
  }
  if (failure) std::rethrow_exception(failure);
  return table;
}

EstimatorResult estimate(std::span<const double> values) {
  if (values.size() < 2) throw InvalidArgument("estimate: need at least 2 values");
  const auto n = static_cast<double>(values.size());
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= n;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double se = std::sqrt(ss / (n - 1.0) / n);
  return {values.size(), mean, se, {mean - 1.96 * se, mean + 1.96 * se}};
}

EstimatorResult mc_estimate(const std::function<double(GaussianStream&)>& sampler, std::size_t n,
                            std::uint64_t seed, unsigned workers) {
  if (n < 2) throw InvalidArgument("mc_estimate: n must be >= 2");
  const auto table = run_replicas(n, seed, workers, [&](std::size_t, GaussianStream& s) {
    return std::vector<double>{sampler(s)};
  });
  return estimate(table.column(0));
}

EstimatorResult paired_difference(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw InvalidArgument("paired_difference: size mismatch");
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  return estimate(d);
}

std::vector<OrthogonalityResult> orthogonality_test(std::span<const double> increments,
                                                    const std::vector<std::vector<double>>& statistics) {
  if (increments.size() < 100) throw InvalidArgument("orthogonality_test: need at least 100 replicas");
  std::vector<OrthogonalityResult> out;
  out.reserve(statistics.size());
  std::vector<double> product(increments.size());
  for (const auto& g : statistics) {
    if (g.size() != increments.size()) throw InvalidArgument("orthogonality_test: statistic length mismatch");
    for (std::size_t i = 0; i < g.size(); ++i) product[i] = increments[i] * g[i];
    OrthogonalityResult r;
    r.product = estimate(product);
    r.degenerate = !(r.product.std_error > 0.0);
    r.z = r.degenerate ? 0.0 : r.product.mean / r.product.std_error;
    out.push_back(r);
  }
  return out;
}

RateFitResult loglog_slope(std::span<const double> meshes, std::span<const double> gaps) {
  if (meshes.size() != gaps.size() || meshes.size() < 3) {
    throw InvalidArgument("loglog_slope: need equal-length inputs with at least 3 points");
  }
  const std::size_t n = meshes.size();
  std::vector<double> x(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(meshes[i] > 0.0) || !(gaps[i] > 0.0)) throw InvalidArgument("loglog_slope: entries must be positive");
    x[i] = std::log(meshes[i]);
    y[i] = std::log(gaps[i]);
  }
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw InvalidArgument("loglog_slope: meshes must not all be equal");
  RateFitResult r;
  r.slope = sxy / sxx;
  r.intercept = my - r.slope * mx;
  r.r_squared = syy > 0.0 ? std::clamp(sxy * sxy / (sxx * syy), 0.0, 1.0) : 1.0;
  r.points = n;
  return r;
}

double ks_statistic(std::vector<double> values, const std::function<double(double)>& cdf) {
  if (values.empty()) throw InvalidArgument("ks_statistic: empty sample");
  std::sort(values.begin(), values.end());
  const auto n = static_cast<double>(values.size());
  double d = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double f = cdf(values[i]);
    d = std::max({d, (i + 1) / n - f, f - i / n});
  }
  return d;
}

double ks_two_sample_statistic(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw InvalidArgument("ks_two_sample_statistic: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const auto na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == x) ++i;
    while (j < b.size() && b[j] == x) ++j;
    d = std::max(d, std::fabs(i / na - j / nb));
  }
  return d;
}

double ks_critical_coefficient(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("ks_critical_coefficient: alpha must lie in (0, 1)");
  return std::sqrt(-0.5 * std::log(alpha / 2.0));
}

}  // namespace arratia
