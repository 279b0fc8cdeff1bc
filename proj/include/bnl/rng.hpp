#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace bnl {

/// Seeded splitmix64 generator. The algorithm is fixed so that a given seed
/// produces the same stream on every platform; nothing in the library draws
/// from OS randomness.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t next_u64() {
    uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, bound). bound must be nonzero. Rejection sampled, so the
  /// result is unbiased and still platform-independent.
  uint64_t next_below(uint64_t bound) {
    const uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    uint64_t v = next_u64();
    while (v >= limit) v = next_u64();
    return v % bound;
  }

  /// Uniform in [0, 1) with 53 random bits.
  double next_unit() { return double(next_u64() >> 11) * 0x1.0p-53; }

  double next_uniform(double lo, double hi) {
    return lo + (hi - lo) * next_unit();
  }

  /// Fisher-Yates shuffle driven by this stream.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = size_t(next_below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  uint64_t state_;
};

/// Derive a sub-seed from a master seed and a purpose tag, so that different
/// consumers of one user-facing seed get decorrelated streams.
inline uint64_t derive_seed(uint64_t seed, std::string_view tag) {
  uint64_t h = 0xcbf29ce484222325ull;  // FNV-1a over the tag
  for (char c : tag) {
    h ^= uint64_t(uint8_t(c));
    h *= 0x100000001b3ull;
  }
  Rng r(seed ^ h);
  return r.next_u64();
}

}  // namespace bnl
