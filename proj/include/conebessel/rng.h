#pragma once

// Philox4x32-10 and per-sample streams. A stream is addressed by
// (seed, sample index), so any partition of the samples over workers
// draws the same numbers.

#include <array>
#include <cstdint>
#include <limits>

namespace conebessel {

using PhiloxBlock = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

PhiloxBlock philox4x32(PhiloxBlock ctr, PhiloxKey key);

// Counter layout: (index lo, index hi, draw lo, draw hi). Meets the
// UniformRandomBitGenerator requirements with 64-bit output.
class SampleStream {
 public:
  using result_type = std::uint64_t;

  SampleStream(std::uint64_t seed, std::uint64_t index);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()();

  // Uniform on the open interval (0, 1), 53 bits.
  double uniform();
  // Standard normal by Box-Muller; the second variate is kept for the next call.
  double normal();

  std::uint64_t index() const { return index_; }

 private:
  PhiloxKey key_;
  std::uint64_t index_;
  std::uint64_t draw_ = 0;
  PhiloxBlock buf_{};
  int used_ = 4;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace conebessel
