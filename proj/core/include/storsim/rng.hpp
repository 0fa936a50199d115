#pragma once

#include <cstdint>
#include <string_view>

namespace storsim {

constexpr std::uint64_t fnv1a64(std::string_view bytes,
                                std::uint64_t hash = 0xcbf29ce484222325ull) {
  for (char c : bytes) {
    hash ^= static_cast<unsigned char>(c);
    hash *= 0x100000001b3ull;
  }
  return hash;
}

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// PCG-XSH-RR 64/32. Small state, identical output on every platform, and the
// state round-trips through checkpoints as two integers.
class Pcg32 {
 public:
  Pcg32() : Pcg32(0x853c49e6748fea9bull, 0xda3e39cb94b95bdbull) {}

  Pcg32(std::uint64_t seed, std::uint64_t sequence) {
    inc_ = (sequence << 1u) | 1u;
    state_ = 0;
    next_u32();
    state_ += seed;
    next_u32();
  }

  static Pcg32 from_state(std::uint64_t state, std::uint64_t inc) {
    Pcg32 rng;
    rng.state_ = state;
    rng.inc_ = inc;
    return rng;
  }

  std::uint32_t next_u32() {
    std::uint64_t old = state_;
    state_ = old * 6364136223846793005ull + inc_;
    std::uint32_t xorshifted =
        static_cast<std::uint32_t>(((old >> 18u) ^ old) >> 27u);
    std::uint32_t rot = static_cast<std::uint32_t>(old >> 59u);
    return (xorshifted >> rot) | (xorshifted << ((32u - rot) & 31u));
  }

  std::uint64_t next_u64() {
    std::uint64_t hi = next_u32();
    return (hi << 32) | next_u32();
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Unbiased uniform integer in [0, bound).
  std::uint32_t uniform_below(std::uint32_t bound) {
    if (bound <= 1) return 0;
    std::uint32_t threshold = (0u - bound) % bound;
    for (;;) {
      std::uint32_t r = next_u32();
      if (r >= threshold) return r % bound;
    }
  }

  /// Uniform integer in [lo, hi], inclusive.
  int uniform_int(int lo, int hi) {
    return lo + static_cast<int>(
                    uniform_below(static_cast<std::uint32_t>(hi - lo + 1)));
  }

  bool bernoulli(double p) { return uniform() < p; }

  std::uint64_t state() const { return state_; }
  std::uint64_t inc() const { return inc_; }

 private:
  std::uint64_t state_;
  std::uint64_t inc_;
};

/// Derives an independent named stream from a root seed. Pure function of
/// (root_seed, name): the same pair always yields the same generator.
inline Pcg32 derive_stream(std::uint64_t root_seed, std::string_view name) {
  std::uint64_t h = fnv1a64(name);
  return Pcg32(splitmix64(root_seed ^ h), h);
}

}  // namespace storsim
