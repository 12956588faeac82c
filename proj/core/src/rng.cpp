#include "bbb/rng.hpp"

#include <cmath>
#include <numbers>

#include "bbb/core.hpp"

namespace bbb {
namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream, std::uint64_t substream) noexcept
    : seed_(seed), stream_(stream), substream_(substream) {
  const std::uint64_t h = mix64(mix64(seed + kGolden) ^ mix64(stream + 2 * kGolden));
  key0_ = mix64(h ^ mix64(substream + 3 * kGolden));
  key1_ = mix64(key0_ ^ 0x243F6A8885A308D3ULL) | 1ULL;
}

std::uint64_t RngStream::next_u64() noexcept {
  const std::uint64_t c = counter_++;
  return mix64(mix64(c * kGolden + key0_) ^ key1_);
}

double RngStream::uniform() noexcept {
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double RngStream::normal() noexcept {
  const double u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double RngStream::exponential(double rate) {
  if (!(rate > 0.0) || !std::isfinite(rate)) throw DomainError("exponential: rate must be positive");
  return -std::log(uniform()) / rate;
}

std::size_t RngStream::uniform_index(std::size_t n) {
  if (n == 0) throw DomainError("uniform_index: empty range");
  const unsigned __int128 product =
      static_cast<unsigned __int128>(next_u64()) * static_cast<unsigned __int128>(n);
  return static_cast<std::size_t>(product >> 64);
}

}  // namespace bbb
