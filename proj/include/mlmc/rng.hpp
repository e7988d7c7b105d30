#pragma once

#include <cmath>
#include <cstdint>

namespace mlmc {

// SplitMix64 step (public domain, Vigna). Used to derive per-sample stream
// seeds and as the per-stream generator itself; statistically plenty for
// sampling noise, and cheap enough to seed once per (level, index).
inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Deterministic random stream keyed by (run seed, level, sample index).
// Statistics are therefore independent of scheduling order, batch shapes
// and execution mode.
class RngStream {
 public:
  RngStream(std::uint64_t run_seed, int level, std::uint64_t sample_index) {
    std::uint64_t s = run_seed;
    std::uint64_t a =
        splitmix64(s) ^ (0xA24BAED4963EE407ULL * static_cast<std::uint64_t>(level + 1));
    state_ = a ^ (sample_index * 0x9FB21C651E98DF25ULL + 0x1D8E4E27C47D124FULL);
    next_u64();
    next_u64();
  }

  std::uint64_t next_u64() { return splitmix64(state_); }

  // Uniform in [0, 1).
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Standard normal via Box-Muller; the partner value is cached.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = 1.0 - uniform01();  // (0, 1], keeps log() finite
    double u2 = uniform01();
    double r = std::sqrt(-2.0 * std::log(u1));
    double t = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(t);
    have_spare_ = true;
    return r * std::cos(t);
  }

 private:
  std::uint64_t state_ = 0;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace mlmc
