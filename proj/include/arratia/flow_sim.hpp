#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "arratia/gauss_rng.hpp"

namespace arratia {

/// Uniform grid on [0, 1] with `n_steps` steps; indices 0..n_steps inclusive.
class TimeGrid {
 public:
  static constexpr int kDefaultSteps = 10000;

  explicit TimeGrid(int n_steps = kDefaultSteps);

  int n_steps() const { return n_steps_; }
  double dt() const { return 1.0 / n_steps_; }
  double time(int index) const { return static_cast<double>(index) / n_steps_; }

 private:
  int n_steps_;
};

/// Ordered points 0 = u_0 < u_1 < ... < u_n = U.
class Partition {
 public:
  explicit Partition(std::vector<double> points);

  static Partition uniform(double extent, int intervals);
  /// 2^depth equal intervals of [0, extent].
  static Partition dyadic(double extent, int depth);

  const std::vector<double>& points() const { return points_; }
  std::size_t size() const { return points_.size(); }
  double extent() const { return points_.back(); }
  double mesh() const;
  /// Index of `u` in points(), or -1. Matches within 1e-12 * max(1, U).
  int index_of(double u) const;
  bool is_subset_of(const Partition& other) const;

 private:
  std::vector<double> points_;
};

struct SimOptions {
  /// Accept within-step crossings with the Brownian-bridge probability.
  bool bridge_correction = true;
  /// Stop storing positions once every particle has coalesced into one
  /// cluster. Meeting times stay exact; positions past that index are
  /// unavailable. Only for experiments that need meeting times alone.
  bool truncate_after_coalescence = false;
  /// Steps where some particle has both neighbours within a few step
  /// deviations are split by Brownian-bridge midpoints, at most this deep.
  /// 0 resolves every step with pairwise bridge tests only.
  int max_refinement_depth = 12;
};

/// One realization of the coalescing system on a TimeGrid.
///
/// Storage is compact: particle k keeps its own path only while it leads its
/// cluster (up to and including its merge index, where the stored value is
/// the merged position). After merging, its position is that of the cluster
/// it joined, found by following `parent` links. Clusters are contiguous in
/// index order and led by their lowest index.
class FlowSample {
 public:
  FlowSample(std::vector<double> starts, TimeGrid grid, std::vector<std::vector<double>> segments,
             std::vector<int> merge_index, std::vector<int> parent, int valid_through);

  std::size_t particle_count() const { return starts_.size(); }
  const TimeGrid& grid() const { return grid_; }
  const std::vector<double>& starts() const { return starts_; }
  double start(std::size_t k) const { return starts_[k]; }
  /// Last grid index with stored positions (n_steps unless truncated).
  int valid_through() const { return valid_through_; }

  double position(std::size_t k, int i) const;
  /// Identifier of the cluster holding particle k at time index i: the
  /// index of its lowest member.
  int cluster_label(std::size_t k, int i) const;
  bool same_cluster(std::size_t j, std::size_t k, int i) const;

  bool merged(std::size_t k) const { return merge_index_[k] <= grid_.n_steps(); }
  /// Grid index at which particle k joins the cluster on its left, or
  /// n_steps + 1 when it never does.
  int raw_merge_index(std::size_t k) const { return merge_index_[k]; }
  int parent(std::size_t k) const { return parent_[k]; }

  /// First index where k and k-1 share a cluster, capped at n_steps.
  int left_meeting_index(std::size_t k) const;
  /// First index where j and k share a cluster, capped at n_steps.
  int pair_meeting_index(std::size_t j, std::size_t k) const;
  bool pair_met(std::size_t j, std::size_t k) const;
  /// First index where k's cluster contains any particle in `others`
  /// (k itself excluded), capped at n_steps; n_steps if `others` is empty.
  int first_meeting_with_any(std::size_t k, std::span<const int> others) const;

  /// Writes positions 0..last of particle k into out (size >= last + 1).
  void copy_path(std::size_t k, int last, std::span<double> out) const;
  std::vector<double> path(std::size_t k) const;

 private:
  std::vector<double> starts_;
  TimeGrid grid_;
  std::vector<std::vector<double>> segments_;
  std::vector<int> merge_index_;
  std::vector<int> parent_;
  int valid_through_;
};

/// Read-only selection of particles of a FlowSample (a coarser partition).
/// Neighbor structure, and therefore left meeting times, refer to the
/// selected particles only. The referenced sample must outlive the view.
class FlowView {
 public:
  FlowView(const FlowSample& sample, std::vector<int> indices);
  static FlowView full(const FlowSample& sample);

  const FlowSample& sample() const { return *sample_; }
  std::size_t particle_count() const { return indices_.size(); }
  int index(std::size_t j) const { return indices_[j]; }
  const std::vector<int>& indices() const { return indices_; }
  double start(std::size_t j) const { return sample_->start(indices_[j]); }
  double position(std::size_t j, int i) const { return sample_->position(indices_[j], i); }
  int left_meeting_index(std::size_t j) const;
  void copy_path(std::size_t j, int last, std::span<double> out) const {
    sample_->copy_path(indices_[j], last, out);
  }

 private:
  const FlowSample* sample_;
  std::vector<int> indices_;
};

/// Coalescing simulation from strictly increasing starting points, one
/// stream per particle. Increment of particle k at step i is
/// sqrt(dt) * streams[k].normal_at(i); the bridge test for an adjacent pair
/// uses the upper leader's uniform_at(i).
FlowSample simulate_flow(std::span<const double> starts, const TimeGrid& grid,
                         std::span<const GaussianStream> streams, SimOptions options = {});
FlowSample simulate_flow(const Partition& partition, const TimeGrid& grid,
                         std::span<const GaussianStream> streams, SimOptions options = {});

/// Per-particle streams for one replica: replica_stream.child(k).
std::vector<GaussianStream> particle_streams(const GaussianStream& replica_stream, std::size_t count);

/// tau(u_k) for k = 1..n as times in [0, 1].
std::vector<double> left_meeting_times(const FlowSample& sample);

/// tau_k: first time particle k's cluster contains one of particles 0..k-1;
/// tau_0 = 1.
double first_meeting_with_any_predecessor(const FlowSample& sample, std::size_t k);

FlowView restrict_to_subpartition(const FlowSample& sample, const Partition& sub);

/// CSV with header time,particle_0..,cluster_0.. and one row per grid index.
void write_trajectory_csv(const FlowSample& sample, std::ostream& out);

/// Replica-indexed family of flow samples; replica i is driven by
/// particle_streams(make_stream(seed, i), n).
class FlowEnsemble {
 public:
  FlowEnsemble(std::vector<double> starts, TimeGrid grid, std::uint64_t seed, std::size_t n_paths,
               SimOptions options = {});

  FlowSample sample(std::size_t replica) const;
  std::size_t size() const { return n_paths_; }
  const std::vector<double>& starts() const { return starts_; }
  const TimeGrid& grid() const { return grid_; }
  std::uint64_t seed() const { return seed_; }

 private:
  std::vector<double> starts_;
  TimeGrid grid_;
  std::uint64_t seed_;
  std::size_t n_paths_;
  SimOptions options_;
};

}  // namespace arratia
