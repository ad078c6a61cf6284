#pragma once

#include <cstdint>

#include "depthstyle/tensor.hpp"

namespace depthstyle {

// xorshift64* generator: tiny, seedable, identical across platforms. Used
// for noise initialization and for seeded test data; never for anything
// cryptographic.
class Rng {
 public:
  explicit Rng(std::uint64_t seed)
      : state_(seed != 0 ? seed : 0x9e3779b97f4a7c15ull) {}

  std::uint64_t next_u64() {
    state_ ^= state_ >> 12;
    state_ ^= state_ << 25;
    state_ ^= state_ >> 27;
    return state_ * 0x2545f4914f6cdd1dull;
  }

  // Uniform double in [0, 1), 53 random bits.
  double next_unit() {
    return static_cast<double>(next_u64() >> 11) * (1.0 / 9007199254740992.0);
  }

  // Uniform double in [lo, hi).
  double next_range(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

 private:
  std::uint64_t state_;
};

// Uniform [0,1) noise tensor; the seeded source for `--init noise`.
inline Tensor3 noise_tensor(int channels, int height, int width, std::uint64_t seed) {
  Tensor3 t(channels, height, width);
  Rng rng(seed);
  for (float& v : t.values()) {
    v = static_cast<float>(rng.next_unit());
  }
  return t;
}

}  // namespace depthstyle
