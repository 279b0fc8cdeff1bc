#include "bnl/truth_table.hpp"

#include <bit>
#include <stdexcept>

namespace bnl {

namespace detail {

size_t BitVec::popcount() const {
  size_t c = 0;
  for (uint64_t w : words) c += size_t(std::popcount(w));
  return c;
}

void BitVec::mask_tail() {
  size_t rem = nbits & 63;
  if (rem) words.back() &= (uint64_t(1) << rem) - 1;
}

}  // namespace detail

namespace {

void check_arity(int n) {
  if (n < 1 || n > kMaxArity)
    throw std::invalid_argument("arity must be in [1, " +
                                std::to_string(kMaxArity) + "], got " +
                                std::to_string(n));
}

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

// In-place XOR-subset butterfly on packed bits; for strides below the word
// size the shift stays inside each word because positions with bit h clear
// map to positions below 2^n.
void xor_butterfly(detail::BitVec& v) {
  static constexpr uint64_t kMask[6] = {
      0x5555555555555555ull, 0x3333333333333333ull, 0x0f0f0f0f0f0f0f0full,
      0x00ff00ff00ff00ffull, 0x0000ffff0000ffffull, 0x00000000ffffffffull};
  for (size_t h = 1; h < v.nbits; h <<= 1) {
    if (h < 64) {
      int lg = std::countr_zero(h);
      for (uint64_t& w : v.words) w ^= (w & kMask[lg]) << h;
    } else {
      size_t hw = h >> 6;  // stride in words
      for (size_t base = 0; base < v.words.size(); base += 2 * hw)
        for (size_t j = 0; j < hw; ++j) v.words[base + hw + j] ^= v.words[base + j];
    }
  }
}

}  // namespace

TruthTable::TruthTable(int n) : n_((check_arity(n), n)), bits_(size_t(1) << n) {}

TruthTable TruthTable::ones(int n) {
  TruthTable t(n);
  for (uint64_t& w : t.bits_.words) w = ~uint64_t(0);
  t.bits_.mask_tail();
  return t;
}

TruthTable TruthTable::from_bit_string(const std::string& s) {
  size_t len = s.size();
  if (len < 2 || (len & (len - 1)) != 0)
    throw std::invalid_argument("truth table length must be a power of two >= 2, got " +
                                std::to_string(len));
  int n = std::countr_zero(len);
  TruthTable t(n);
  for (size_t i = 0; i < len; ++i) {
    if (s[i] != '0' && s[i] != '1')
      throw std::invalid_argument("truth table may contain only 0 and 1");
    t.set_bit(i, s[i] - '0');
  }
  return t;
}

TruthTable TruthTable::from_hex(int n, const std::string& s) {
  check_arity(n);
  size_t nbits = size_t(1) << n;
  size_t ndigits = (nbits + 3) / 4;
  if (s.size() != ndigits)
    throw std::invalid_argument("hex table for n=" + std::to_string(n) + " needs " +
                                std::to_string(ndigits) + " digits, got " +
                                std::to_string(s.size()));
  TruthTable t(n);
  for (size_t j = 0; j < ndigits; ++j) {
    int v = hex_value(s[j]);
    if (v < 0) throw std::invalid_argument(std::string("bad hex digit '") + s[j] + "'");
    for (size_t k = 0; k < 4; ++k) {
      size_t pos = 4 * j + k;
      int bit = (v >> (3 - k)) & 1;
      if (pos < nbits)
        t.set_bit(pos, bit);
      else if (bit)
        throw std::invalid_argument("nonzero padding bits in hex table");
    }
  }
  return t;
}

TruthTable TruthTable::from_index(int n, uint64_t index) {
  check_arity(n);
  if (n > 6)
    throw std::invalid_argument("function indexes only cover n <= 6 (2^64 functions at n=6)");
  size_t nbits = size_t(1) << n;
  if (n < 6 && index >> nbits)
    throw std::invalid_argument("function index out of range for n=" + std::to_string(n));
  TruthTable t(n);
  t.bits_.words[0] = index;
  t.bits_.mask_tail();
  return t;
}

TruthTable TruthTable::random(int n, Rng& rng) {
  TruthTable t(n);
  for (uint64_t& w : t.bits_.words) w = rng.next_u64();
  t.bits_.mask_tail();
  return t;
}

uint64_t TruthTable::to_index() const {
  if (n_ > 6) throw std::invalid_argument("function indexes only cover n <= 6");
  return bits_.words[0];
}

std::string TruthTable::to_bit_string() const {
  std::string s(size(), '0');
  for (size_t i = 0; i < size(); ++i) s[i] = char('0' + bit(i));
  return s;
}

std::string TruthTable::to_hex() const {
  static const char* digits = "0123456789abcdef";
  size_t nbits = size();
  size_t ndigits = (nbits + 3) / 4;
  std::string s(ndigits, '0');
  for (size_t j = 0; j < ndigits; ++j) {
    int v = 0;
    for (size_t k = 0; k < 4; ++k) {
      size_t pos = 4 * j + k;
      if (pos < nbits) v |= bit(pos) << (3 - k);
    }
    s[j] = digits[v];
  }
  return s;
}

AnfCoefficients::AnfCoefficients(int n) : n_((check_arity(n), n)), bits_(size_t(1) << n) {}

int weight(const TruthTable& f) { return int(f.bits_.popcount()); }

int hamming_distance(const TruthTable& f, const TruthTable& g) {
  if (f.arity() != g.arity())
    throw std::invalid_argument("hamming_distance: arity mismatch (" +
                                std::to_string(f.arity()) + " vs " +
                                std::to_string(g.arity()) + ")");
  size_t c = 0;
  for (size_t i = 0; i < f.bits_.words.size(); ++i)
    c += size_t(std::popcount(f.bits_.words[i] ^ g.bits_.words[i]));
  return int(c);
}

AnfCoefficients mobius_transform(const TruthTable& f) {
  AnfCoefficients a(f.arity());
  a.bits_ = f.bits_;
  xor_butterfly(a.bits_);
  return a;
}

TruthTable truth_table_from_anf(const AnfCoefficients& a) {
  TruthTable t(a.arity());
  t.bits_ = a.bits_;
  xor_butterfly(t.bits_);
  return t;
}

int degree(const TruthTable& f) {
  AnfCoefficients a = mobius_transform(f);
  int deg = 0;
  for (size_t m = 0; m < a.size(); ++m)
    if (a.coeff(m)) deg = std::max(deg, std::popcount(m));
  return deg;
}

TruthTable affine_function(int n, uint32_t omega, int a0) {
  check_arity(n);
  size_t nbits = size_t(1) << n;
  if (omega >= nbits) throw std::invalid_argument("affine mask out of range");
  TruthTable t(n);
  for (size_t x = 0; x < nbits; ++x)
    t.set_bit(x, (std::popcount(uint64_t(omega) & x) & 1) ^ a0);
  return t;
}

std::vector<TruthTable> affine_functions(int n) {
  check_arity(n);
  size_t nbits = size_t(1) << n;
  std::vector<TruthTable> out;
  out.reserve(2 * nbits);
  for (int a0 = 0; a0 <= 1; ++a0)
    for (uint32_t omega = 0; omega < nbits; ++omega)
      out.push_back(affine_function(n, omega, a0));
  return out;
}

bool is_affine(const TruthTable& f) { return degree(f) <= 1; }

SignVector sign_encode(const TruthTable& f) {
  SignVector v;
  v.n = f.arity();
  v.values.resize(f.size());
  for (size_t i = 0; i < f.size(); ++i) v.values[i] = int8_t(1 - 2 * f.bit(i));
  return v;
}

TruthTable sign_decode(const SignVector& v) {
  TruthTable t(v.n);
  if (v.values.size() != t.size())
    throw std::invalid_argument("sign vector length does not match arity");
  for (size_t i = 0; i < v.values.size(); ++i) {
    if (v.values[i] != 1 && v.values[i] != -1)
      throw std::invalid_argument("sign vector entries must be +1 or -1");
    t.set_bit(i, (1 - v.values[i]) / 2);
  }
  return t;
}

TruthTable function_from_index(int n, uint64_t index) {
  return TruthTable::from_index(n, index);
}

uint64_t function_to_index(const TruthTable& f) { return f.to_index(); }

TruthTable complement(const TruthTable& f) {
  TruthTable t = f;
  for (uint64_t& w : t.bits_.words) w = ~w;
  t.bits_.mask_tail();
  return t;
}

TruthTable operator^(const TruthTable& f, const TruthTable& g) {
  if (f.arity() != g.arity()) throw std::invalid_argument("xor: arity mismatch");
  TruthTable t = f;
  for (size_t i = 0; i < t.bits_.words.size(); ++i) t.bits_.words[i] ^= g.words()[i];
  return t;
}

}  // namespace bnl
