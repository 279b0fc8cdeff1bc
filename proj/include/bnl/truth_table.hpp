#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bnl/rng.hpp"

namespace bnl {

inline constexpr int kMaxArity = 20;

namespace detail {

// Packed bit storage; position i lives in words[i/64] at bit (i%64).
// Bits at positions >= nbits are kept zero.
struct BitVec {
  size_t nbits = 0;
  std::vector<uint64_t> words;

  BitVec() = default;
  explicit BitVec(size_t n) : nbits(n), words((n + 63) / 64, 0) {}

  int get(size_t i) const { return int((words[i >> 6] >> (i & 63)) & 1u); }
  void set(size_t i, int v) {
    uint64_t m = uint64_t(1) << (i & 63);
    if (v)
      words[i >> 6] |= m;
    else
      words[i >> 6] &= ~m;
  }
  size_t popcount() const;
  void mask_tail();

  bool operator==(const BitVec&) const = default;
};

}  // namespace detail

struct AnfCoefficients;

/// An n-variable Boolean function stored as a packed 2^n-bit truth table.
///
/// bits[i] = f(x) where the binary expansion of i is the input assignment
/// ordered lexicographically, most significant bit of i = x1. Every other
/// index in the library (linear masks, Hadamard rows, ANF monomials) uses
/// this same bit <-> variable correspondence.
class TruthTable {
 public:
  /// Zero function of the given arity.
  explicit TruthTable(int n);

  static TruthTable zeros(int n) { return TruthTable(n); }
  static TruthTable ones(int n);

  /// Parse "0110"-style binary; length must be a power of two >= 2.
  static TruthTable from_bit_string(const std::string& s);
  /// Parse the compact hex form: ceil(2^n/4) digits, bit 4j+k of the table is
  /// bit (3-k) of hex digit j, i.e. the digit reads its four bits left to
  /// right.
  static TruthTable from_hex(int n, const std::string& s);
  /// Bijection between tables and integers for n <= 6: bit i of index ==
  /// bits[i].
  static TruthTable from_index(int n, uint64_t index);
  /// Uniformly random table; consumes exactly ceil(2^n/64) draws.
  static TruthTable random(int n, Rng& rng);

  int arity() const { return n_; }
  size_t size() const { return size_t(1) << n_; }
  int bit(size_t i) const { return bits_.get(i); }
  void set_bit(size_t i, int v) { bits_.set(i, v); }
  const std::vector<uint64_t>& words() const { return bits_.words; }

  uint64_t to_index() const;  // inverse of from_index, n <= 6
  std::string to_bit_string() const;
  std::string to_hex() const;

  bool operator==(const TruthTable&) const = default;

 private:
  int n_;
  detail::BitVec bits_;
  friend TruthTable operator^(const TruthTable&, const TruthTable&);
  friend TruthTable complement(const TruthTable&);
  friend int weight(const TruthTable&);
  friend int hamming_distance(const TruthTable&, const TruthTable&);
  friend struct AnfCoefficients;
  friend AnfCoefficients mobius_transform(const TruthTable&);
  friend TruthTable truth_table_from_anf(const AnfCoefficients&);
};

/// Algebraic normal form of a function: coeffs[m] is the coefficient of the
/// monomial whose variable set is the bit pattern of m, with the same
/// bit <-> variable correspondence as the truth-table input index.
struct AnfCoefficients {
  explicit AnfCoefficients(int n);

  int arity() const { return n_; }
  size_t size() const { return size_t(1) << n_; }
  int coeff(size_t m) const { return bits_.get(m); }
  void set_coeff(size_t m, int v) { bits_.set(m, v); }

  bool operator==(const AnfCoefficients&) const = default;

  int n_;
  detail::BitVec bits_;
};

/// +/-1 encoding of a table: values[i] = 1 - 2*bits[i].
struct SignVector {
  int n = 0;
  std::vector<int8_t> values;
};

int weight(const TruthTable& f);
int hamming_distance(const TruthTable& f, const TruthTable& g);

/// XOR-subset butterfly; an involution on the underlying bit sequence.
AnfCoefficients mobius_transform(const TruthTable& f);
TruthTable truth_table_from_anf(const AnfCoefficients& a);

/// Largest monomial size with a nonzero ANF coefficient; 0 for the zero
/// function and for constants.
int degree(const TruthTable& f);

/// l_w(x) = popcount(w & x) mod 2, complemented when a0 = 1.
TruthTable affine_function(int n, uint32_t omega, int a0);

/// All 2^(n+1) affine functions: index w holds l_w, index w + 2^n its
/// complement, so entries at offset 2^n are bitwise complements.
std::vector<TruthTable> affine_functions(int n);

bool is_affine(const TruthTable& f);

SignVector sign_encode(const TruthTable& f);
TruthTable sign_decode(const SignVector& v);

TruthTable function_from_index(int n, uint64_t index);
uint64_t function_to_index(const TruthTable& f);

TruthTable complement(const TruthTable& f);
TruthTable operator^(const TruthTable& f, const TruthTable& g);

}  // namespace bnl
