#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace mixdecomp {

// Philox4x64-10 counter-based generator. The 128-bit key is (seed, stream),
// so every (seed, replica) pair gets an independent stream with a 2^256
// counter period. Satisfies UniformRandomBitGenerator.
class Rng {
 public:
  using result_type = std::uint64_t;
  using Block = std::array<std::uint64_t, 4>;

  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0) : key_{seed, stream} {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    if (used_ == 4) refill();
    return buffer_[used_++];
  }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  // Uniform integer on [0, n), n > 0; unbiased by rejection.
  std::uint64_t below(std::uint64_t n);

  // The raw bijection, exposed for known-answer tests.
  static Block philox(Block counter, std::array<std::uint64_t, 2> key);

 private:
  void refill();

  std::array<std::uint64_t, 2> key_;
  Block counter_{0, 0, 0, 0};
  Block buffer_{};
  int used_ = 4;
};

}  // namespace mixdecomp
