#pragma once

#include <cstdint>

namespace ddcam {

/// 64-bit linear congruential generator used for every seeded artifact
/// (toy extractor filters, demo bundles).
///
///   state <- state * 6364136223846793005 + 1442695040888963407  (mod 2^64)
///
/// The initial state is the seed itself. uniform01() takes the top 24 bits
/// of the freshly advanced state, giving a float-representable value in [0, 1).
/// Any implementation following these three lines regenerates identical draws.
class Lcg64 {
 public:
  explicit Lcg64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ = state_ * 6364136223846793005ULL + 1442695040888963407ULL;
    return state_;
  }

  double uniform01() { return static_cast<double>(next_u64() >> 40) / static_cast<double>(1U << 24); }

  // lo + (hi - lo) * u, rounded to float.
  float uniform(float lo, float hi) {
    return static_cast<float>(static_cast<double>(lo) + (static_cast<double>(hi) - lo) * uniform01());
  }

  // Uniform integer in [0, n). n must be > 0.
  std::uint64_t below(std::uint64_t n) { return (next_u64() >> 11) % n; }

 private:
  std::uint64_t state_;
};

}  // namespace ddcam
