#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace sedenet {

/// xoshiro256** seeded through splitmix64. Same seed, same stream; the
/// four-word state round-trips through checkpoints so interrupted runs
/// continue the exact sequence.
class Prng {
 public:
  explicit Prng(uint64_t seed);

  uint64_t next_u64();

  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi);
  float uniform_float(float lo, float hi);

  /// Uniform integer in [0, bound); bound must be nonzero.
  uint64_t uniform_int(uint64_t bound);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      const size_t j = static_cast<size_t>(uniform_int(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  std::array<uint64_t, 4> state() const noexcept { return state_; }
  void set_state(const std::array<uint64_t, 4>& s) noexcept { state_ = s; }

 private:
  std::array<uint64_t, 4> state_;
};

}  // namespace sedenet
