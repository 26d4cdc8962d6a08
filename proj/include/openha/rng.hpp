#pragma once

#include <cstdint>

namespace openha {

// Deterministic PRNG with a fixed algorithm (splitmix64 core). std::mt19937
// plus the standard distributions is not bit-stable across standard library
// implementations, so every seeded component in this project draws from this
// generator instead.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, bound). Uses rejection sampling so the result is unbiased
  // and identical on every platform.
  std::uint64_t next_below(std::uint64_t bound) {
    if (bound <= 1) return 0;
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t v = next_u64();
    while (v >= limit) v = next_u64();
    return v % bound;
  }

  int next_int(int lo, int hi_inclusive) {
    return lo + static_cast<int>(next_below(
                    static_cast<std::uint64_t>(hi_inclusive - lo + 1)));
  }

  // Uniform in [0, 1) with 53 bits of precision.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double next_double(double lo, double hi) {
    return lo + (hi - lo) * next_double();
  }

  // Standard normal via Box-Muller (always consumes two draws).
  double next_gaussian();

  // Derives an independent stream, e.g. one per episode or worker.
  Rng fork(std::uint64_t salt) {
    Rng child(state_ ^ (salt * 0xD1B54A32D192ED03ULL + 0x8CB92BA72F3D8DD7ULL));
    child.next_u64();
    return child;
  }

 private:
  std::uint64_t state_;
};

}  // namespace openha
