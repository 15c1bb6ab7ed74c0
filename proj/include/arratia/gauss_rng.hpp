#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace arratia {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
///
/// A pure function of (counter, key); there is no hidden state, so any
/// block can be produced independently of every other block.
namespace philox {

using Counter = std::array<std::uint32_t, 4>;
using Key = std::array<std::uint32_t, 2>;

Counter block(Counter counter, Key key);

}  // namespace philox

/// Deterministic Gaussian stream addressed by (seed, stream_id, position).
///
/// Each position maps to one 128-bit Philox block: the low 64 bits feed the
/// normal draw, the high 64 bits feed the uniform draw. `normal_at(i)` and
/// `uniform_at(i)` are therefore independent of each other and of every other
/// position. Normals use the inverse-CDF method (Wichura AS241), one uniform
/// per normal.
///
/// Streams are small values: copy them freely, hand them to any worker, but
/// do not advance one instance from two threads at once.
class GaussianStream {
 public:
  GaussianStream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }
  std::uint64_t position() const { return position_; }
  void seek(std::uint64_t position) { position_ = position; }

  double normal_at(std::uint64_t position) const;
  /// Uniform on the open interval (0, 1).
  double uniform_at(std::uint64_t position) const;

  double next_normal() { return normal_at(position_++); }
  double next_uniform() { return uniform_at(position_++); }

  /// Stream for sub-entity `index` (e.g. a particle inside one replica).
  ///
  /// The child is keyed by a hash of (seed, stream_id) and uses `index` as
  /// its stream id, so children of distinct parents never share a key.
  GaussianStream child(std::uint64_t index) const;

 private:
  std::array<std::uint64_t, 2> raw_block(std::uint64_t position) const;

  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint64_t position_ = 0;
};

GaussianStream make_stream(std::uint64_t seed, std::uint64_t stream_id);

/// `n_steps` consecutive N(0, dt) increments, advancing the stream.
std::vector<double> brownian_increments(GaussianStream& stream, long n_steps, double dt);

/// Probability that a Brownian bridge with variance rate `var_rate` over a
/// step of length `dt`, with endpoint gaps d0 and d1 (both >= 0), touches 0
/// inside the step: exp(-2 d0 d1 / (var_rate dt)).
double bridge_crossing_prob(double d0, double d1, double dt, double var_rate);

double normal_cdf(double x);

/// Standard normal quantile, Wichura's AS241 (PPND16), |rel err| ~ 1e-16.
double inverse_normal_cdf(double p);

/// 53-bit uniform on (0, 1) from 64 random bits.
double bits_to_open_unit(std::uint64_t bits);

}  // namespace arratia
