#pragma once

#include <cstdint>
#include <cmath>
#include <vector>

namespace tracksim {

// splitmix64; the full generator state is one u64, which keeps
// checkpointing and stream forking trivial.
inline uint64_t splitmix64_next(uint64_t& state) {
  state += 0x9E3779B97F4A7C15ull;
  uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Independent deterministic stream addressed by (seed, purpose, index).
// Same address -> same sequence, regardless of what other streams consumed.
class Rng {
 public:
  Rng() = default;
  explicit Rng(uint64_t raw_state) : state_(raw_state) {}

  static Rng stream(uint64_t seed, uint64_t purpose, uint64_t index = 0) {
    // Mix the address through two rounds so nearby (seed, purpose, index)
    // tuples land far apart.
    uint64_t s = seed;
    uint64_t a = splitmix64_next(s) ^ (purpose * 0x9E3779B97F4A7C15ull);
    uint64_t b = splitmix64_next(a) ^ (index * 0xD1B54A32D192ED03ull);
    splitmix64_next(b);
    return Rng(b);
  }

  uint64_t next_u64() { return splitmix64_next(state_); }

  // Uniform in [0, 1).
  double uniform01() { return double(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + uniform01() * (hi - lo); }

  // Uniform in {0, ..., n-1}. Multiply-shift; bias is < 2^-64 and irrelevant here.
  uint64_t uniform_index(uint64_t n) {
    return uint64_t((static_cast<__uint128_t>(next_u64()) * n) >> 64);
  }

  // Standard normal via Box-Muller, one draw per call (pair cached).
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform01();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    double u2 = uniform01();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    // Fisher-Yates, fixed traversal order.
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = size_t(uniform_index(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  // State accessors for checkpointing. The Box-Muller spare is dropped on
  // save; sequences diverge by at most one cached gaussian, so saves happen
  // only at iteration boundaries where no spare is pending.
  uint64_t raw_state() const { return state_; }
  void set_raw_state(uint64_t s) {
    state_ = s;
    has_spare_ = false;
  }
  bool has_pending_normal() const { return has_spare_; }

 private:
  uint64_t state_ = 0x853C49E6748FEA9Bull;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// Stream purposes. Fixed numbers: they are part of the reproducibility
// contract for a given seed.
namespace rng_purpose {
inline constexpr uint64_t kClipGeneration = 1;
inline constexpr uint64_t kSceneRandomization = 2;
inline constexpr uint64_t kEnvReset = 3;
inline constexpr uint64_t kPolicySample = 4;
inline constexpr uint64_t kParamInit = 5;
inline constexpr uint64_t kMinibatchShuffle = 6;
inline constexpr uint64_t kEval = 7;
}  // namespace rng_purpose

}  // namespace tracksim
