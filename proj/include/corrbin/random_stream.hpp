// Seedable uniform source behind every Bernoulli draw.
//
// Generator: xoshiro256** (Blackman & Vigna), state filled from SplitMix64.
// Both are specified bit-for-bit, so a seed reproduces the same draws on every
// platform and compiler.
//
// Child streams: row r of a batch seeded with s uses the stream whose
// SplitMix64 seeding state is mix64(mix64(s) + r), where mix64 is the
// SplitMix64 finalizer. Rows are therefore reproducible independently of the
// order (or thread) in which they are generated.

#ifndef CORRBIN_RANDOM_STREAM_HPP
#define CORRBIN_RANDOM_STREAM_HPP

#include <array>
#include <cstdint>

namespace corrbin {

/// SplitMix64 output finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : seed_(seed) { reseed(seed); }

  /// Independent stream for row `row` of a batch seeded with `seed`.
  static RandomStream for_row(std::uint64_t seed, std::uint64_t row) {
    RandomStream s(seed);
    s.reseed(mix64(mix64(seed) + row));
    return s;
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  /// Uniform on [0,1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// One uniform draw; 1 with probability q. q <= 0 never fires, q >= 1 always does.
  bool bernoulli(double q) {
    ++draws_;
    return uniform() < q;
  }

  std::uint64_t seed() const { return seed_; }
  /// Number of bernoulli() calls so far.
  std::uint64_t draws() const { return draws_; }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  void reseed(std::uint64_t x) {
    for (auto& w : s_) {
      x += 0x9e3779b97f4a7c15ULL;
      w = mix64(x);
    }
  }

  std::uint64_t seed_;
  std::uint64_t draws_ = 0;
  std::array<std::uint64_t, 4> s_{};
};

inline RandomStream new_stream(std::uint64_t seed) { return RandomStream(seed); }

}  // namespace corrbin

#endif  // CORRBIN_RANDOM_STREAM_HPP
