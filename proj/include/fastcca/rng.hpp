#pragma once

#include <cstdint>

namespace fastcca {

/// Counter-based random stream keyed by (seed, stream id).
///
/// Value k of a stream is a pure function of (seed, stream, k), so independent
/// consumers (sign vectors, sample sets, hash tables, generator matrices) each
/// own a disjoint stream and parallel fills produce the same bits as serial
/// ones. The mixing function is the SplitMix64 finalizer.
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t bits(std::uint64_t counter) const noexcept;
  /// Uniform on the open interval (0, 1), 53 bits of resolution.
  double uniform(std::uint64_t counter) const noexcept;
  /// Standard normal by inverse CDF of uniform(counter).
  double normal(std::uint64_t counter) const;
  /// +1 or -1 with equal probability.
  double sign(std::uint64_t counter) const noexcept;
  /// Unbiased integer in [0, bound), bound > 0.
  std::uint64_t below(std::uint64_t counter, std::uint64_t bound) const noexcept;

  std::uint64_t key() const noexcept { return key_; }

 private:
  std::uint64_t key_;
};

/// Sequential cursor over a RandomStream.
class RandomCursor {
 public:
  explicit RandomCursor(RandomStream stream) : stream_(stream) {}
  std::uint64_t below(std::uint64_t bound) noexcept { return stream_.below(next_++, bound); }
  double uniform() noexcept { return stream_.uniform(next_++); }

 private:
  RandomStream stream_;
  std::uint64_t next_ = 0;
};

std::uint64_t mix64(std::uint64_t x) noexcept;

/// Child seed for repetition / trial `index` of a master seed.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept;

/// Stream identifiers; every random object drawn from one seed gets its own.
namespace streams {
inline constexpr std::uint64_t signs = 1;
inline constexpr std::uint64_t sample = 2;
inline constexpr std::uint64_t hash = 3;
inline constexpr std::uint64_t generator_base = 100;
}  // namespace streams

}  // namespace fastcca
