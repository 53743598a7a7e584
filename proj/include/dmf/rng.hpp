#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace dmf {

/// Philox4x32-10 block function (Salmon et al., SC'11). Pure function of
/// (counter, key); this is what makes every stream index-addressable.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                        std::array<std::uint32_t, 2> key);

/// Mixes two 64-bit words into one; used to derive stream indices.
std::uint64_t mix64(std::uint64_t a, std::uint64_t b);

/// A counter-based random stream. The n-th 64-bit word of stream (seed, index)
/// is a pure function of (seed, index, n): results do not depend on which
/// thread consumes the stream or on anything consumed elsewhere.
///
/// Satisfies UniformRandomBitGenerator, but the distribution helpers below
/// should be preferred over <random> distributions, whose output is
/// implementation-defined.
class RandomStream {
 public:
  using result_type = std::uint64_t;

  RandomStream(std::uint64_t seed, std::uint64_t index);

  /// Stream for outer sample `i` of the estimator family `tag`.
  static RandomStream for_sample(std::uint64_t seed, std::uint64_t tag,
                                 std::uint64_t i) {
    return RandomStream(seed, mix64(tag, i));
  }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t index() const { return index_; }

  /// Independent child stream; does not advance this one.
  RandomStream substream(std::uint64_t tag) const {
    return RandomStream(seed_, mix64(index_, tag));
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }
  result_type operator()();

  /// Uniform on the open interval (0, 1).
  double uniform();
  double normal();
  double exponential();
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);
  /// +1 or -1 with probability 1/2.
  int sign();
  /// Poisson(mean) by inversion, truncated at `cap`.
  unsigned poisson(double mean, unsigned cap);

 private:
  void refill();

  std::uint64_t seed_;
  std::uint64_t index_;
  std::uint64_t block_ = 0;
  std::array<std::uint64_t, 2> buffer_{};
  int buffered_ = 0;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

/// Truncation point for Poisson sampling: mean + 12 sqrt(mean) + 20.
unsigned poisson_cap(double mean);

}  // namespace dmf
