#pragma once

#include <cstdint>

namespace arw {

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

// SplitMix64 finalizer (Stafford mix 13). Bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ULL;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBULL;
  z ^= z >> 31;
  return z;
}

// Counter-based replica seeding: replicas may run in any order or in
// parallel and still see identical streams.
constexpr std::uint64_t derive_replica_seed(std::uint64_t master_seed,
                                            std::uint64_t replica_index) noexcept {
  return mix64(master_seed + kGolden * (replica_index + 1));
}

// Named sub-streams of one seed. Instruction draws, chain driving, initial
// configurations, hole patterns and policy shuffles must never overlap.
enum class Stream : std::uint64_t {
  tape = 1,
  drive = 2,
  init = 3,
  holes = 4,
  policy = 5,
  pairing = 6,
  bootstrap = 7,
  instance = 8,
};

constexpr std::uint64_t substream(std::uint64_t seed, Stream s) noexcept {
  return mix64(seed ^ (static_cast<std::uint64_t>(s) * 0xC2B2AE3D27D4EB4FULL));
}

// Maps a 64-bit word to [0, 1) with 53 random bits.
constexpr double u64_to_unit(std::uint64_t x) noexcept {
  return static_cast<double>(x >> 11) * 0x1.0p-53;
}

// Sequential generator for code that consumes a stream of draws.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

  std::uint64_t next() noexcept {
    state_ += kGolden;
    return mix64(state_);
  }

  double next_unit() noexcept { return u64_to_unit(next()); }

  // Unbiased draw from {0, ..., bound-1} by rejection.
  std::uint64_t next_below(std::uint64_t bound) noexcept {
    const std::uint64_t limit = bound * (~std::uint64_t{0} / bound);
    for (;;) {
      const std::uint64_t x = next();
      if (x < limit) return x % bound;
    }
  }

 private:
  std::uint64_t state_;
};

}  // namespace arw
