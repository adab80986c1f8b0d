#pragma once

#include <cstdint>

namespace minigrpo {

// Distinct key domains so streams for different jobs never collide.
enum class RngPurpose : std::uint64_t {
  weight_init = 1,
  question_gen = 2,
  rollout = 3,
  evaluation = 4,
  warmup = 5,
};

// splitmix64 finalizer; good 64-bit mixing, cheap, constexpr.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Counter-based deterministic stream. The key is derived from
// (seed, purpose, a, b, c); draw n is a pure function of (key, n), so results
// are independent of scheduling and identical across runs.
class RngStream {
 public:
  explicit RngStream(std::uint64_t key) : key_(key) {}

  static RngStream keyed(std::uint64_t seed, RngPurpose purpose,
                         std::uint64_t a = 0, std::uint64_t b = 0,
                         std::uint64_t c = 0) {
    std::uint64_t k = mix64(seed);
    k = mix64(k ^ static_cast<std::uint64_t>(purpose));
    k = mix64(k ^ a);
    k = mix64(k ^ b);
    k = mix64(k ^ c);
    return RngStream(k);
  }

  std::uint64_t next_u64() { return mix64(key_ ^ mix64(counter_++)); }

  // Uniform in [0, 1) with 53 bits of mantissa.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform in [0, n). Fixed-point multiply; the residual bias is far below
  // anything observable at the sample sizes used here.
  std::uint64_t next_below(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  std::uint64_t key() const noexcept { return key_; }
  std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace minigrpo
