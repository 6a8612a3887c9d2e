#include "fastcca/rng.hpp"

#include <boost/math/special_functions/erf.hpp>
#include <cmath>

namespace fastcca {

namespace {
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;
constexpr std::uint64_t kRetry = 0xD1B54A32D192ED03ull;
}  // namespace

std::uint64_t mix64(std::uint64_t x) noexcept {
  x ^= x >> 30;
  x *= 0xBF58476D1CE4E5B9ull;
  x ^= x >> 27;
  x *= 0x94D049BB133111EBull;
  x ^= x >> 31;
  return x;
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept {
  return mix64(master ^ mix64(index * kGolden + 0x5851F42D4C957F2Dull));
}

RandomStream::RandomStream(std::uint64_t seed, std::uint64_t stream)
    : key_(mix64(seed ^ mix64(stream + kRetry))) {}

std::uint64_t RandomStream::bits(std::uint64_t counter) const noexcept {
  return mix64(key_ + (counter + 1) * kGolden);
}

double RandomStream::uniform(std::uint64_t counter) const noexcept {
  return (static_cast<double>(bits(counter) >> 11) + 0.5) * 0x1.0p-53;
}

double RandomStream::normal(std::uint64_t counter) const {
  // Phi^{-1}(u) = -sqrt(2) erfc^{-1}(2u)
  return -std::sqrt(2.0) * boost::math::erfc_inv(2.0 * uniform(counter));
}

double RandomStream::sign(std::uint64_t counter) const noexcept {
  return (bits(counter) >> 63) ? -1.0 : 1.0;
}

std::uint64_t RandomStream::below(std::uint64_t counter, std::uint64_t bound) const noexcept {
  // Lemire's multiply-shift with rejection; retries stay a function of counter.
  std::uint64_t x = bits(counter);
  const std::uint64_t threshold = (0 - bound) % bound;
  for (std::uint64_t attempt = 1;; ++attempt) {
    const auto wide = static_cast<unsigned __int128>(x) * bound;
    if (static_cast<std::uint64_t>(wide) >= threshold) return static_cast<std::uint64_t>(wide >> 64);
    x = mix64(x ^ (attempt * kRetry));
  }
}

}  // namespace fastcca
