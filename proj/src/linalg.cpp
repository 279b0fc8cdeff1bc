#include "bnl/linalg.hpp"

#include <stdexcept>

namespace bnl {

namespace {

using i128 = __int128;

constexpr uint64_t kP1 = (uint64_t(1) << 61) - 1;  // Mersenne prime
constexpr uint64_t kP2 = 2147483647;               // 2^31 - 1

uint64_t mulmod(uint64_t a, uint64_t b, uint64_t p) {
  return uint64_t((unsigned __int128)a * b % p);
}

uint64_t powmod(uint64_t a, uint64_t e, uint64_t p) {
  uint64_t r = 1;
  while (e) {
    if (e & 1) r = mulmod(r, a, p);
    a = mulmod(a, a, p);
    e >>= 1;
  }
  return r;
}

uint64_t invmod(uint64_t a, uint64_t p) { return powmod(a, p - 2, p); }

int rank_mod(const std::vector<std::vector<int32_t>>& rows, uint64_t p) {
  size_t m = rows.size();
  size_t n = rows[0].size();
  std::vector<std::vector<uint64_t>> a(m, std::vector<uint64_t>(n));
  for (size_t i = 0; i < m; ++i)
    for (size_t j = 0; j < n; ++j) {
      int64_t v = rows[i][j] % int64_t(p);
      a[i][j] = uint64_t(v < 0 ? v + int64_t(p) : v);
    }
  size_t r = 0;
  for (size_t c = 0; c < n && r < m; ++c) {
    size_t piv = r;
    while (piv < m && a[piv][c] == 0) ++piv;
    if (piv == m) continue;
    std::swap(a[piv], a[r]);
    uint64_t inv = invmod(a[r][c], p);
    for (size_t j = c; j < n; ++j) a[r][j] = mulmod(a[r][j], inv, p);
    for (size_t i = 0; i < m; ++i) {
      if (i == r || a[i][c] == 0) continue;
      uint64_t f = a[i][c];
      for (size_t j = c; j < n; ++j) {
        uint64_t s = mulmod(f, a[r][j], p);
        a[i][j] = a[i][j] >= s ? a[i][j] - s : a[i][j] + p - s;
      }
    }
    ++r;
  }
  return int(r);
}

// Fraction-free elimination; intermediate entries are minors of the input
// matrix, so they can exceed 128 bits for large inputs. Returns -1 on
// overflow so the caller can switch to the modular path.
int rank_bareiss(const std::vector<std::vector<int32_t>>& rows) {
  size_t m = rows.size();
  size_t n = rows[0].size();
  std::vector<std::vector<i128>> a(m, std::vector<i128>(n));
  for (size_t i = 0; i < m; ++i)
    for (size_t j = 0; j < n; ++j) a[i][j] = rows[i][j];

  i128 prev = 1;
  size_t r = 0;
  for (size_t c = 0; c < n && r < m; ++c) {
    size_t piv = r;
    while (piv < m && a[piv][c] == 0) ++piv;
    if (piv == m) continue;
    std::swap(a[piv], a[r]);
    for (size_t i = r + 1; i < m; ++i) {
      for (size_t j = c + 1; j < n; ++j) {
        i128 t1, t2, num;
        if (__builtin_mul_overflow(a[r][c], a[i][j], &t1) ||
            __builtin_mul_overflow(a[i][c], a[r][j], &t2) ||
            __builtin_sub_overflow(t1, t2, &num))
          return -1;
        a[i][j] = num / prev;  // division is exact in Bareiss
      }
      a[i][c] = 0;
    }
    prev = a[r][c];
    ++r;
  }
  return int(r);
}

}  // namespace

int rank(const std::vector<std::vector<int32_t>>& rows) {
  if (rows.empty()) throw std::invalid_argument("rank: no vectors");
  size_t n = rows[0].size();
  if (n == 0) throw std::invalid_argument("rank: empty vectors");
  for (const auto& r : rows)
    if (r.size() != n) throw std::invalid_argument("rank: vectors of unequal length");

  int r = rank_bareiss(rows);
  if (r >= 0) return r;
  return std::max(rank_mod(rows, kP1), rank_mod(rows, kP2));
}

IndependenceTracker::IndependenceTracker(size_t dim) : dim_(dim) {
  if (dim == 0) throw std::invalid_argument("IndependenceTracker: zero dimension");
}

bool IndependenceTracker::try_add(const std::vector<int32_t>& v) {
  if (v.size() != dim_) throw std::invalid_argument("IndependenceTracker: wrong vector length");
  constexpr uint64_t p = (uint64_t(1) << 61) - 1;
  std::vector<uint64_t> row(dim_);
  for (size_t j = 0; j < dim_; ++j) {
    int64_t x = v[j] % int64_t(p);
    row[j] = uint64_t(x < 0 ? x + int64_t(p) : x);
  }
  // reduce against the accepted basis
  for (size_t b = 0; b < basis_.size(); ++b) {
    uint64_t f = row[pivot_[b]];
    if (f == 0) continue;
    for (size_t j = 0; j < dim_; ++j) {
      uint64_t s = mulmod(f, basis_[b][j], p);
      row[j] = row[j] >= s ? row[j] - s : row[j] + p - s;
    }
  }
  size_t piv = 0;
  while (piv < dim_ && row[piv] == 0) ++piv;
  if (piv == dim_) return false;
  uint64_t inv = invmod(row[piv], p);
  for (size_t j = 0; j < dim_; ++j) row[j] = mulmod(row[j], inv, p);
  basis_.push_back(std::move(row));
  pivot_.push_back(piv);
  return true;
}

}  // namespace bnl
