#include "arratia/flow_sim.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <string>

#include "arratia/errors.hpp"

namespace arratia {

TimeGrid::TimeGrid(int n_steps) : n_steps_(n_steps) {
  if (n_steps < 1) throw InvalidArgument("TimeGrid: n_steps must be >= 1");
}

Partition::Partition(std::vector<double> points) : points_(std::move(points)) {
  if (points_.size() < 2) throw InvalidArgument("Partition: need at least two points");
  if (points_.front() != 0.0) throw InvalidArgument("Partition: first point must be 0");
  for (std::size_t k = 1; k < points_.size(); ++k) {
    if (!(points_[k] > points_[k - 1])) throw InvalidArgument("Partition: points must be strictly increasing");
  }
  if (!std::isfinite(points_.back())) throw InvalidArgument("Partition: non-finite point");
}

Partition Partition::uniform(double extent, int intervals) {
  if (!(extent > 0.0)) throw InvalidArgument("Partition::uniform: extent must be > 0");
  if (intervals < 1) throw InvalidArgument("Partition::uniform: intervals must be >= 1");
  std::vector<double> pts(static_cast<std::size_t>(intervals) + 1);
  for (int k = 0; k <= intervals; ++k) pts[k] = extent * k / intervals;
  pts.back() = extent;
  return Partition(std::move(pts));
}

Partition Partition::dyadic(double extent, int depth) {
  if (depth < 0 || depth > 24) throw InvalidArgument("Partition::dyadic: depth must be in [0, 24]");
  return uniform(extent, 1 << depth);
}

double Partition::mesh() const {
  double m = 0.0;
  for (std::size_t k = 1; k < points_.size(); ++k) m = std::max(m, points_[k] - points_[k - 1]);
  return m;
}

int Partition::index_of(double u) const {
  const double tol = 1e-12 * std::max(1.0, std::fabs(extent()));
  auto it = std::lower_bound(points_.begin(), points_.end(), u - tol);
  if (it != points_.end() && std::fabs(*it - u) <= tol) return static_cast<int>(it - points_.begin());
  return -1;
}

bool Partition::is_subset_of(const Partition& other) const {
  return std::all_of(points_.begin(), points_.end(), [&](double u) { return other.index_of(u) >= 0; });
}

FlowSample::FlowSample(std::vector<double> starts, TimeGrid grid,
                       std::vector<std::vector<double>> segments, std::vector<int> merge_index,
                       std::vector<int> parent, int valid_through)
    : starts_(std::move(starts)),
      grid_(grid),
      segments_(std::move(segments)),
      merge_index_(std::move(merge_index)),
      parent_(std::move(parent)),
      valid_through_(valid_through) {}

double FlowSample::position(std::size_t k, int i) const {
  if (i < 0 || i > valid_through_) throw InvalidArgument("FlowSample::position: index outside stored range");
  std::size_t p = k;
  while (i > merge_index_[p]) p = static_cast<std::size_t>(parent_[p]);
  return segments_[p][static_cast<std::size_t>(i)];
}

int FlowSample::cluster_label(std::size_t k, int i) const {
  std::size_t p = k;
  while (merge_index_[p] <= i) p = static_cast<std::size_t>(parent_[p]);
  return static_cast<int>(p);
}

bool FlowSample::same_cluster(std::size_t j, std::size_t k, int i) const {
  return cluster_label(j, i) == cluster_label(k, i);
}

int FlowSample::left_meeting_index(std::size_t k) const {
  if (k == 0 || k >= particle_count()) throw InvalidArgument("left_meeting_index: k must be in [1, n]");
  return std::min(merge_index_[k], grid_.n_steps());
}

int FlowSample::pair_meeting_index(std::size_t j, std::size_t k) const {
  const std::size_t lo = std::min(j, k), hi = std::max(j, k);
  int m = 0;
  for (std::size_t l = lo + 1; l <= hi; ++l) m = std::max(m, merge_index_[l]);
  return std::min(m, grid_.n_steps());
}

bool FlowSample::pair_met(std::size_t j, std::size_t k) const {
  const std::size_t lo = std::min(j, k), hi = std::max(j, k);
  for (std::size_t l = lo + 1; l <= hi; ++l) {
    if (merge_index_[l] > grid_.n_steps()) return false;
  }
  return true;
}

int FlowSample::first_meeting_with_any(std::size_t k, std::span<const int> others) const {
  int below = -1, above = -1;
  for (int o : others) {
    if (o < 0 || static_cast<std::size_t>(o) >= particle_count()) {
      throw InvalidArgument("first_meeting_with_any: particle index out of range");
    }
    const auto uo = static_cast<std::size_t>(o);
    if (uo < k && o > below) below = o;
    if (uo > k && (above < 0 || o < above)) above = o;
  }
  int best = grid_.n_steps();
  if (below >= 0) best = std::min(best, pair_meeting_index(static_cast<std::size_t>(below), k));
  if (above >= 0) best = std::min(best, pair_meeting_index(k, static_cast<std::size_t>(above)));
  return best;
}

void FlowSample::copy_path(std::size_t k, int last, std::span<double> out) const {
  if (last < 0 || last > valid_through_) throw InvalidArgument("FlowSample::copy_path: index outside stored range");
  if (out.size() < static_cast<std::size_t>(last) + 1) throw InvalidArgument("FlowSample::copy_path: buffer too small");
  std::size_t p = k;
  int i = 0;
  while (i <= last) {
    const int end = std::min(last, merge_index_[p]);
    const auto& seg = segments_[p];
    std::copy(seg.begin() + i, seg.begin() + end + 1, out.begin() + i);
    i = end + 1;
    if (i <= last) p = static_cast<std::size_t>(parent_[p]);
  }
}

std::vector<double> FlowSample::path(std::size_t k) const {
  std::vector<double> out(static_cast<std::size_t>(valid_through_) + 1);
  copy_path(k, valid_through_, out);
  return out;
}

FlowView::FlowView(const FlowSample& sample, std::vector<int> indices)
    : sample_(&sample), indices_(std::move(indices)) {
  for (std::size_t j = 0; j < indices_.size(); ++j) {
    if (indices_[j] < 0 || static_cast<std::size_t>(indices_[j]) >= sample.particle_count()) {
      throw InvalidArgument("FlowView: particle index out of range");
    }
    if (j > 0 && indices_[j] <= indices_[j - 1]) throw InvalidArgument("FlowView: indices must increase");
  }
}

FlowView FlowView::full(const FlowSample& sample) {
  std::vector<int> idx(sample.particle_count());
  for (std::size_t k = 0; k < idx.size(); ++k) idx[k] = static_cast<int>(k);
  return FlowView(sample, std::move(idx));
}

int FlowView::left_meeting_index(std::size_t j) const {
  if (j == 0 || j >= indices_.size()) throw InvalidArgument("FlowView::left_meeting_index: j must be in [1, n]");
  return sample_->pair_meeting_index(static_cast<std::size_t>(indices_[j - 1]),
                                     static_cast<std::size_t>(indices_[j]));
}

namespace {

// A step is split when some particle has both neighbours within this many
// step standard deviations; isolated pairs are handled exactly by the bridge.
constexpr double kCloseGap = 4.0;

class StepResolver {
 public:
  StepResolver(std::span<const GaussianStream> streams, const SimOptions& options, std::vector<int>& leaders,
               std::vector<int>& merge_index, std::vector<int>& parent)
      : streams_(streams),
        options_(options),
        leaders_(leaders),
        merge_index_(merge_index),
        parent_(parent),
        sub_(streams.begin(), streams.end()),
        mid_(static_cast<std::size_t>(options.max_refinement_depth) + 1, std::vector<double>(streams.size())) {}

  void run(std::uint64_t step, int mark, const std::vector<double>& start, const std::vector<double>& end, double h) {
    step_ = step;
    mark_ = mark;
    children_ready_ = false;
    resolve(start, end, h, 1, 0);
  }

 private:
  bool crowded(const std::vector<double>& start, const std::vector<double>& end, double h) const {
    const double limit = kCloseGap * std::sqrt(h);
    const auto gap = [&](std::size_t j) {
      const int lo = leaders_[j - 1], hi = leaders_[j];
      return std::min(start[hi] - start[lo], end[hi] - end[lo]);
    };
    for (std::size_t j = 1; j + 1 < leaders_.size(); ++j) {
      if (gap(j) < limit && gap(j + 1) < limit) return true;
    }
    return false;
  }

  void resolve(const std::vector<double>& start, const std::vector<double>& end, double h, std::uint64_t node,
               int depth) {
    if (leaders_.size() < 2) return;
    if (depth < options_.max_refinement_depth && crowded(start, end, h)) {
      if (!children_ready_) {
        for (int l : leaders_) sub_[l] = streams_[l].child(step_);
        children_ready_ = true;
      }
      auto& mid = mid_[static_cast<std::size_t>(depth)];
      const double half_sd = 0.5 * std::sqrt(h);
      for (int l : leaders_) mid[l] = 0.5 * (start[l] + end[l]) + half_sd * sub_[l].normal_at(node);
      resolve(start, mid, 0.5 * h, 2 * node, depth + 1);
      resolve(mid, end, 0.5 * h, 2 * node + 1, depth + 1);
      return;
    }
    survivors_.assign(1, leaders_[0]);
    for (std::size_t j = 1; j < leaders_.size(); ++j) {
      const int lo = survivors_.back(), hi = leaders_[j];
      const double gap1 = end[hi] - end[lo];
      bool merge = gap1 <= 0.0;
      if (!merge && options_.bridge_correction) {
        const double gap0 = start[hi] - start[lo];
        // Gap of two independent standard Wiener processes: variance rate 2.
        const double exponent = gap0 * gap1 / h;
        if (exponent < 745.0) {
          const double u = depth == 0 ? streams_[hi].uniform_at(step_) : sub_[hi].uniform_at(node);
          merge = u < std::exp(-exponent);
        }
      }
      if (merge) {
        merge_index_[hi] = mark_;
        parent_[hi] = lo;
      } else {
        survivors_.push_back(hi);
      }
    }
    leaders_.swap(survivors_);
  }

  std::span<const GaussianStream> streams_;
  const SimOptions& options_;
  std::vector<int>& leaders_;
  std::vector<int>& merge_index_;
  std::vector<int>& parent_;
  std::vector<GaussianStream> sub_;
  std::vector<std::vector<double>> mid_;
  std::vector<int> survivors_;
  std::uint64_t step_ = 0;
  int mark_ = 0;
  bool children_ready_ = false;
};

}  // namespace

FlowSample simulate_flow(std::span<const double> starts, const TimeGrid& grid,
                         std::span<const GaussianStream> streams, SimOptions options) {
  const std::size_t n = starts.size();
  if (n == 0) throw InvalidArgument("simulate_flow: no particles");
  if (streams.size() != n) throw InvalidArgument("simulate_flow: need exactly one stream per particle");
  for (std::size_t k = 1; k < n; ++k) {
    if (!(starts[k] > starts[k - 1])) throw InvalidArgument("simulate_flow: starts must be strictly increasing");
  }
  if (options.max_refinement_depth < 0 || options.max_refinement_depth > 30) {
    throw InvalidArgument("simulate_flow: max_refinement_depth must lie in [0, 30]");
  }

  const int n_steps = grid.n_steps();
  const double dt = grid.dt();
  const double sd = std::sqrt(dt);
  const int never = n_steps + 1;

  std::vector<std::vector<double>> segments(n);
  std::vector<int> merge_index(n, never);
  std::vector<int> parent(n, -1);
  std::vector<double> current(starts.begin(), starts.end());
  std::vector<double> previous(starts.begin(), starts.end());
  for (std::size_t k = 0; k < n; ++k) segments[k].push_back(starts[k]);

  std::vector<int> leaders(n);
  for (std::size_t k = 0; k < n; ++k) leaders[k] = static_cast<int>(k);
  std::vector<int> merged_now;
  StepResolver resolver(streams, options, leaders, merge_index, parent);
  int valid_through = n_steps;

  for (int i = 0; i < n_steps; ++i) {
    if (options.truncate_after_coalescence && leaders.size() == 1) {
      valid_through = i;
      break;
    }
    for (int l : leaders) {
      previous[l] = current[l];
      current[l] += sd * streams[l].normal_at(static_cast<std::uint64_t>(i));
    }
    merged_now.assign(leaders.begin(), leaders.end());
    resolver.run(static_cast<std::uint64_t>(i), i + 1, previous, current, dt);
    // Particles absorbed this step end where their (lower-index) parent ends.
    for (int l : merged_now) {
      if (merge_index[l] == i + 1) current[l] = current[parent[l]];
      segments[l].push_back(current[l]);
    }
  }

  return FlowSample(std::vector<double>(starts.begin(), starts.end()), grid, std::move(segments),
                    std::move(merge_index), std::move(parent), valid_through);
}

FlowSample simulate_flow(const Partition& partition, const TimeGrid& grid,
                         std::span<const GaussianStream> streams, SimOptions options) {
  return simulate_flow(std::span<const double>(partition.points()), grid, streams, options);
}

std::vector<GaussianStream> particle_streams(const GaussianStream& replica_stream, std::size_t count) {
  std::vector<GaussianStream> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) out.push_back(replica_stream.child(k));
  return out;
}

std::vector<double> left_meeting_times(const FlowSample& sample) {
  std::vector<double> out;
  for (std::size_t k = 1; k < sample.particle_count(); ++k) {
    out.push_back(sample.grid().time(sample.left_meeting_index(k)));
  }
  return out;
}

double first_meeting_with_any_predecessor(const FlowSample& sample, std::size_t k) {
  if (k >= sample.particle_count()) throw InvalidArgument("first_meeting_with_any_predecessor: k out of range");
  if (k == 0) return 1.0;
  std::vector<int> preds(k);
  for (std::size_t j = 0; j < k; ++j) preds[j] = static_cast<int>(j);
  return sample.grid().time(sample.first_meeting_with_any(k, preds));
}

FlowView restrict_to_subpartition(const FlowSample& sample, const Partition& sub) {
  const Partition full(sample.starts());
  std::vector<int> idx;
  idx.reserve(sub.size());
  for (double u : sub.points()) {
    const int k = full.index_of(u);
    if (k < 0) throw InvalidArgument("restrict_to_subpartition: point " + std::to_string(u) + " not in sample");
    idx.push_back(k);
  }
  return FlowView(sample, std::move(idx));
}

void write_trajectory_csv(const FlowSample& sample, std::ostream& out) {
  const std::size_t n = sample.particle_count();
  out << "time";
  for (std::size_t k = 0; k < n; ++k) out << ",particle_" << k;
  for (std::size_t k = 0; k < n; ++k) out << ",cluster_" << k;
  out << '\n';
  const auto old_precision = out.precision(17);
  for (int i = 0; i <= sample.valid_through(); ++i) {
    out << sample.grid().time(i);
    for (std::size_t k = 0; k < n; ++k) out << ',' << sample.position(k, i);
    for (std::size_t k = 0; k < n; ++k) out << ',' << sample.cluster_label(k, i);
    out << '\n';
  }
  out.precision(old_precision);
}

FlowEnsemble::FlowEnsemble(std::vector<double> starts, TimeGrid grid, std::uint64_t seed,
                           std::size_t n_paths, SimOptions options)
    : starts_(std::move(starts)), grid_(grid), seed_(seed), n_paths_(n_paths), options_(options) {
  if (starts_.empty()) throw InvalidArgument("FlowEnsemble: no particles");
}

FlowSample FlowEnsemble::sample(std::size_t replica) const {
  const auto streams = particle_streams(make_stream(seed_, replica), starts_.size());
  return simulate_flow(std::span<const double>(starts_), grid_, streams, options_);
}

}  // namespace arratia
