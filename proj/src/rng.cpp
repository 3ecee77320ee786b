#include "popadjust/rng.hpp"

#include <cstddef>

namespace popadjust {

namespace {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t splitmix_next(std::uint64_t& x) {
  x += kGolden;
  return mix64(x);
}

inline std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace

std::uint64_t stream_key(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  std::uint64_t h = mix64(a + kGolden);
  h = mix64(h ^ (b + kGolden + (h << 6) + (h >> 2)));
  h = mix64(h ^ (c + kGolden + (h << 6) + (h >> 2)));
  return h;
}

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream) : seed_(seed), stream_(stream) {
  std::uint64_t x = mix64(seed + kGolden) ^ mix64(stream * kGolden + kGolden);
  for (auto& s : state_) s = splitmix_next(x);
  bool all_zero = true;
  for (auto s : state_)
    if (s != 0) all_zero = false;
  if (all_zero) state_[0] = kGolden;
}

RngStream RngStream::fork(std::uint64_t key) const {
  return RngStream(seed_, stream_key(stream_, key, 0x5eedULL));
}

std::uint64_t RngStream::next_u64() {
  // xoshiro256++
  std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
  std::uint64_t t = state_[1] << 17;
  state_[2] ^= state_[0];
  state_[3] ^= state_[1];
  state_[1] ^= state_[2];
  state_[0] ^= state_[3];
  state_[2] ^= t;
  state_[3] = rotl(state_[3], 45);
  return result;
}

double RngStream::uniform() {
  // 53-bit mantissa shifted into (0,1); never returns an endpoint.
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

std::size_t RngStream::uniform_index(std::size_t n) {
  return static_cast<std::size_t>(next_u64() % static_cast<std::uint64_t>(n));
}

}  // namespace popadjust
