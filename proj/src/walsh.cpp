#include "bnl/walsh.hpp"

#include <bit>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>

namespace bnl {

namespace {

constexpr int kMaxHadamardOrder = 4096;
constexpr int kMaxNaiveArity = 14;
constexpr int kMaxBruteforceArity = 12;

}  // namespace

std::vector<double> HadamardMatrix::row_doubles(int r) const {
  std::vector<double> out(order);
  for (int c = 0; c < order; ++c) out[c] = double(at(r, c));
  return out;
}

const HadamardMatrix& hadamard(int order) {
  if (order < 2 || (order & (order - 1)) != 0)
    throw std::invalid_argument("Hadamard order must be a power of two >= 2, got " +
                                std::to_string(order));
  if (order > kMaxHadamardOrder)
    throw std::invalid_argument("Hadamard order capped at " +
                                std::to_string(kMaxHadamardOrder));

  static std::mutex mu;
  static std::map<int, std::unique_ptr<const HadamardMatrix>> cache;

  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(order);
  if (it == cache.end()) {
    auto m = std::make_unique<HadamardMatrix>();
    m->order = order;
    m->entries.resize(size_t(order) * order);
    for (int r = 0; r < order; ++r)
      for (int c = 0; c < order; ++c)
        m->entries[size_t(r) * order + c] =
            (std::popcount(unsigned(r & c)) & 1) ? int8_t(-1) : int8_t(1);
    it = cache.emplace(order, std::move(m)).first;
  }
  return *it->second;
}

WalshSpectrum walsh_naive(const TruthTable& f) {
  if (f.arity() > kMaxNaiveArity)
    throw std::invalid_argument("walsh_naive is O(4^n) and guarded to n <= " +
                                std::to_string(kMaxNaiveArity) + "; use fwt");
  size_t nbits = f.size();
  WalshSpectrum s;
  s.n = f.arity();
  s.values.resize(nbits);
  for (size_t w = 0; w < nbits; ++w) {
    int32_t acc = 0;
    for (size_t x = 0; x < nbits; ++x) {
      int sign = (f.bit(x) ^ (std::popcount(w & x) & 1)) ? -1 : 1;
      acc += sign;
    }
    s.values[w] = acc;
  }
  return s;
}

void fwt_inplace(std::vector<int32_t>& v) {
  size_t n = v.size();
  if (n == 0 || (n & (n - 1)) != 0)
    throw std::invalid_argument("fwt length must be a power of two");
  for (size_t h = 1; h < n; h <<= 1)
    for (size_t base = 0; base < n; base += 2 * h)
      for (size_t j = base; j < base + h; ++j) {
        int32_t a = v[j];
        int32_t b = v[j + h];
        v[j] = a + b;
        v[j + h] = a - b;
      }
}

WalshSpectrum fwt(const TruthTable& f) {
  WalshSpectrum s;
  s.n = f.arity();
  s.values.resize(f.size());
  for (size_t i = 0; i < f.size(); ++i) s.values[i] = 1 - 2 * f.bit(i);
  fwt_inplace(s.values);
  return s;
}

int nonlinearity(const TruthTable& f) {
  WalshSpectrum s = fwt(f);
  int32_t mx = 0;
  for (int32_t v : s.values) mx = std::max(mx, v < 0 ? -v : v);
  return int((int64_t(1) << (f.arity() - 1)) - mx / 2);
}

int nonlinearity_bruteforce(const TruthTable& f) {
  if (f.arity() > kMaxBruteforceArity)
    throw std::invalid_argument("nonlinearity_bruteforce is guarded to n <= " +
                                std::to_string(kMaxBruteforceArity) + "; use nonlinearity");
  int best = int(f.size());
  for (const TruthTable& g : affine_functions(f.arity()))
    best = std::min(best, hamming_distance(f, g));
  return best;
}

std::vector<int32_t> affine_distances(const TruthTable& f) {
  WalshSpectrum s = fwt(f);
  int32_t half = int32_t(f.size() / 2);
  std::vector<int32_t> d(2 * f.size());
  for (size_t w = 0; w < f.size(); ++w) {
    d[w] = half - s.values[w] / 2;
    d[w + f.size()] = half + s.values[w] / 2;
  }
  return d;
}

std::string spectrum_dump(const WalshSpectrum& s) {
  std::string out;
  for (size_t w = 0; w < s.values.size(); ++w) {
    out += std::to_string(w);
    out += '\t';
    out += std::to_string(s.values[w]);
    out += '\n';
  }
  return out;
}

}  // namespace bnl
