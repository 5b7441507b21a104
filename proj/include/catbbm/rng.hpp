#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace catbbm {

/// splitmix64 finalizer; used to derive independent keys from (seed, index).
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Seed for replicate `index` of a run seeded with `seed`.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) noexcept {
  return mix64(seed ^ mix64(index + 0x632be59bd9b4e019ULL));
}

/*
 * Counter-based random stream (Philox4x32-10).
 *
 * The key is the 64-bit seed and the 128-bit counter is (stream_id, block).
 * A stream is therefore a pure function of (seed, stream_id): two streams
 * with different ids never share a block, and re-creating a stream replays
 * the same sequence bit for bit.
 *
 * Satisfies UniformRandomBitGenerator, but the library only uses the
 * hand-written draws below so results do not depend on the standard
 * library's distribution implementations.
 */
class RngStream {
 public:
  using result_type = std::uint64_t;

  RngStream(std::uint64_t seed, std::uint64_t stream_id) noexcept
      : seed_(seed), stream_id_(stream_id) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }
  result_type operator()() noexcept { return next_u64(); }

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }

  std::uint64_t next_u64() noexcept;

  /// Uniform on the open interval (0, 1) with 53 bits of resolution.
  double uniform() noexcept;
  /// Standard normal (Box-Muller; the second variate is cached).
  double normal() noexcept;
  /// Unit-rate exponential.
  double exponential() noexcept;
  /// Uniform index in [0, n).
  std::uint64_t index(std::uint64_t n) noexcept;

 private:
  void refill() noexcept;

  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  unsigned used_ = 4;
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

}  // namespace catbbm
