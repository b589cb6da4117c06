#pragma once

#include <cstdint>
#include <initializer_list>

#include "qst/errors.hpp"

namespace qst {

// splitmix64 finalizer (Steele, Lea, Flood: "Fast Splittable Pseudorandom
// Number Generators"). Used both as the seed-mixing function and, in counter
// mode, as the sampling stream. Chosen over std engines so that seeds,
// substreams and sampled values are bit-identical across platforms, runs and
// worker counts.
inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Folds a master seed and a list of context parts (qubits, shots, replicate
// index, label code, ...) into one stream seed. Every reproducibility contract
// in the library routes through this single documented mixing function.
inline uint64_t derive_seed(uint64_t master, std::initializer_list<uint64_t> parts) {
  uint64_t h = splitmix64(master ^ 0x517cc1b727220a95ull);
  for (uint64_t p : parts) h = splitmix64(h ^ (p + 0x9e3779b97f4a7c15ull));
  return h;
}

// Counter-mode splitmix64 stream.
class Rng {
public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ull;
    uint64_t x = state_;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
  }

  // Uniform on [0, 1) with 53-bit resolution.
  double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double next_uniform(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

  // Unbiased integer on [0, m) via rejection.
  uint64_t next_below(uint64_t m) {
    if (m == 0) throw input_error("next_below: bound must be positive");
    uint64_t limit = ~0ull - ~0ull % m;
    uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return x % m;
  }

private:
  uint64_t state_;
};

} // namespace qst
