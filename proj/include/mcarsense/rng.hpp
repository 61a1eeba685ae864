#pragma once

#include <cstdint>
#include <random>

namespace mcarsense {

/// Seeded random stream identified by (seed, stream_id).
///
/// Each stream owns a 64-bit Mersenne twister whose full state is expanded
/// from both identifiers through std::seed_seq, so replication k of an
/// experiment draws from stream (seed, k) regardless of how replications are
/// scheduled. Copying a stream copies its state: the copy replays the same
/// sequence.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }

  /// Derive an independent child stream (used to fan out sub-tasks).
  RngStream substream(std::uint64_t index) const;

  /// Uniform on the open interval (0, 1).
  double uniform();
  /// Standard normal.
  double normal();
  /// Standard exponential.
  double exponential();

  std::uint64_t next_u64() { return engine_(); }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace mcarsense
