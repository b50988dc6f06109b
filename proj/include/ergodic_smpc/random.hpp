#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace ergodic_smpc {

/// Seeded random source identified by a (seed, stream) pair.
///
/// The engine is a std::mt19937_64 seeded through std::seed_seq, both of which
/// are fully specified by the standard. Floating-point transforms are written
/// out here rather than taken from <random> distributions, whose output is
/// implementation-defined, so draw sequences are reproducible across
/// toolchains.
class RandomSource {
 public:
  explicit RandomSource(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream() const noexcept { return stream_; }

  /// Independent source derived from this one's identity (not its state).
  RandomSource substream(std::uint64_t id) const;

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi);
  /// Standard normal via Box-Muller (one variate per call).
  double normal();
  /// Uniform integer in [0, n).
  std::size_t index(std::size_t n);

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::mt19937_64 engine_;
};

/// Mixes a stream id with a child id into a new stream id (splitmix64 finaliser).
std::uint64_t derive_stream(std::uint64_t stream, std::uint64_t id) noexcept;

}  // namespace ergodic_smpc
