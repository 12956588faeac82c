#pragma once

// Counter-based random streams.
//
// Every draw is a pure function of (seed, stream, substream, counter): the
// 64-bit word at position `counter` is two rounds of the SplitMix64 finalizer
// keyed by a hash of (seed, stream, substream). Replica r of an experiment
// uses stream id r, so results do not depend on scheduling order.
//
// Derived variates:
//   uniform()       (k + 0.5) * 2^-53 with k the top 53 bits; in (0, 1)
//   normal()        Box-Muller cosine branch, two words per draw, no caching
//   exponential(r)  -log(uniform()) / r
//   uniform_index   128-bit multiply-high of one word

#include <cstddef>
#include <cstdint>
#include <limits>

namespace bbb {

class RngStream {
 public:
  using result_type = std::uint64_t;

  RngStream(std::uint64_t seed, std::uint64_t stream, std::uint64_t substream = 0) noexcept;

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream() const noexcept { return stream_; }
  std::uint64_t substream_id() const noexcept { return substream_; }
  std::uint64_t counter() const noexcept { return counter_; }

  /// Same seed and stream, different substream, counter reset to 0.
  RngStream substream(std::uint64_t id) const noexcept { return {seed_, stream_, id}; }

  std::uint64_t next_u64() noexcept;
  result_type operator()() noexcept { return next_u64(); }
  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  double uniform() noexcept;
  double normal() noexcept;
  /// Throws DomainError unless rate > 0.
  double exponential(double rate);
  /// Uniform on {0, ..., n-1}; throws DomainError for n == 0.
  std::size_t uniform_index(std::size_t n);

  friend bool operator==(const RngStream&, const RngStream&) = default;

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t substream_;
  std::uint64_t key0_;
  std::uint64_t key1_;
  std::uint64_t counter_ = 0;
};

}  // namespace bbb
