#ifndef POPADJUST_RNG_HPP
#define POPADJUST_RNG_HPP

#include <cstdint>

namespace popadjust {

/// Mix a set of integers into a single stream id (splitmix-style avalanche,
/// hash-combine chaining). Used to key independent substreams by things like
/// (scenario, replicate, method).
std::uint64_t stream_key(std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0);

/// Deterministic random stream: xoshiro256++ seeded through splitmix64 from a
/// (seed, stream) pair. Two instances with equal (seed, stream) produce
/// bitwise-identical sequences; distinct stream ids give statistically
/// independent streams. All distribution sampling in this library goes
/// through this class (no std::<distribution> use), so every draw is
/// reproducible across platforms and worker counts.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

  /// Derive an independent substream keyed off this stream's identity.
  /// Depends only on (seed, stream, key), never on how many draws have been
  /// consumed, so parallel schedules cannot perturb it.
  RngStream fork(std::uint64_t key) const;

  std::uint64_t next_u64();

  /// Uniform draw strictly inside (0, 1).
  double uniform();

  /// Uniform integer in [0, n).
  std::size_t uniform_index(std::size_t n);

 private:
  std::uint64_t state_[4];
  std::uint64_t seed_;
  std::uint64_t stream_;
};

}  // namespace popadjust

#endif
