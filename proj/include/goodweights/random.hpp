#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace goodweights {

/// Mixes a master seed with a stream index (splitmix64 finalizer), so that
/// stream i of a master seed can be regenerated in isolation.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

/// Seeded random source. Built on std::mt19937_64, whose output sequence is
/// fixed by the standard; all variates are derived here from raw 64-bit draws
/// so the same seed gives the same numbers with any standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on the open interval (0, 1).
  double uniform() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Uniform on the open interval (lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal (Box-Muller, one variate per call).
  double normal();

  /// +1 or -1 with probability 1/2 each.
  int sign() { return (engine_() >> 63) != 0 ? 1 : -1; }

  /// Uniform integer in [0, n).
  std::size_t index(std::size_t n);

 private:
  std::mt19937_64 engine_;
};

}  // namespace goodweights
