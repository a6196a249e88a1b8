#pragma once

#include <cstdint>
#include <limits>

namespace dppfit {

/// Counter-based random stream keyed by (seed, stream_id).
///
/// Output i is a bijective 64-bit mix of key + i * golden_gamma, so a stream is
/// a pure function of its key and position: distinct stream ids give
/// independent sequences regardless of the order in which they are consumed.
/// Satisfies UniformRandomBitGenerator.
class RngStream {
 public:
  using result_type = std::uint64_t;

  RngStream(std::uint64_t seed, std::uint64_t stream_id);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform();
  /// Uniform double in (0, 1).
  double uniform_open();
  /// Poisson variate with the given mean.
  std::uint64_t poisson(double mean);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }
  std::uint64_t position() const { return counter_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Stafford's variant 13 of the MurmurHash3 64-bit finalizer.
std::uint64_t mix64(std::uint64_t z);

}  // namespace dppfit
