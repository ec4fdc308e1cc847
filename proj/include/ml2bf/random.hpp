#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace ml2bf {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// xoshiro256** generator. Satisfies UniformRandomBitGenerator so it plugs
/// into the <random> distributions.
class Xoshiro256 {
 public:
  using result_type = std::uint64_t;

  explicit Xoshiro256(std::uint64_t seed = 0) {
    std::uint64_t s = seed;
    for (auto &word : state_) {
      s = splitmix64(s);
      word = s;
    }
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  std::array<std::uint64_t, 4> state_{};
};

/// Stream for replicate `replicate` of a run seeded with `seed`.
///
/// The 256-bit generator state is filled by iterating splitmix64 starting
/// from key = splitmix64(seed) ^ splitmix64(replicate ^ 0xd1b54a32d192ed03).
/// Streams depend only on (seed, replicate), so results do not depend on how
/// replicates are spread across worker threads.
inline Xoshiro256 derive_stream(std::uint64_t seed, std::uint64_t replicate) {
  const std::uint64_t key = splitmix64(seed) ^ splitmix64(replicate ^ 0xd1b54a32d192ed03ULL);
  return Xoshiro256(key);
}

/// Seed for an independent sub-experiment (a table cell, a scenario) of a run.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t label) {
  return splitmix64(splitmix64(seed) + 0x632be59bd9b4e019ULL * (label + 1));
}

}  // namespace ml2bf
