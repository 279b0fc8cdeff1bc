#pragma once

#include <cstdint>
#include <vector>

namespace bnl {

/// Rank over the rationals of a set of integer row vectors.
///
/// Uses fraction-free (Bareiss) elimination in 128-bit integers, which is
/// provably overflow-free for +/-1 entries up to 45x45 minors; if an
/// intermediate would overflow, falls back to elimination modulo two large
/// primes and returns the larger of the two modular ranks (a lower bound on
/// the rational rank that is exact except on astronomically unlikely inputs;
/// a full-rank answer is always exact).
int rank(const std::vector<std::vector<int32_t>>& rows);

/// Incremental independence filter over GF(p), p = 2^61 - 1. A vector that
/// reduces to nonzero against the accepted basis is independent of it over
/// the rationals as well, so every acceptance is exact; a rejection may
/// (with negligible probability) discard an independent vector, which costs
/// a retry and nothing else.
class IndependenceTracker {
 public:
  explicit IndependenceTracker(size_t dim);

  /// Accepts and remembers v if it is independent of the accepted set.
  bool try_add(const std::vector<int32_t>& v);
  size_t rank() const { return basis_.size(); }
  size_t dim() const { return dim_; }

 private:
  size_t dim_;
  std::vector<std::vector<uint64_t>> basis_;  // rows reduced mod p, pivot normalized to 1
  std::vector<size_t> pivot_;                 // pivot column of each basis row
};

}  // namespace bnl
