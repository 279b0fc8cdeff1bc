#pragma once

#include <cstdint>
#include <vector>

#include "bnl/truth_table.hpp"

namespace bnl {

/// Sylvester-ordered Hadamard matrix of a power-of-two order N:
/// at(i,j) = (-1)^popcount(i & j). Rows are mutually orthogonal and row 0 is
/// all ones.
struct HadamardMatrix {
  int order = 0;
  std::vector<int8_t> entries;  // row-major

  int at(int r, int c) const { return entries[size_t(r) * order + c]; }
  std::vector<double> row_doubles(int r) const;
};

/// Construct (or fetch from a process-wide cache) the order-N matrix.
/// N must be a power of two with 2 <= N <= 4096; the cache is safe under
/// concurrent readers.
const HadamardMatrix& hadamard(int order);

struct WalshSpectrum {
  int n = 0;
  std::vector<int32_t> values;  // values[w] = W_f(w)
};

/// Direct O(N^2) spectrum: W_f(w) = sum_x (-1)^(f(x) + popcount(w & x)).
/// Guarded to n <= 14; the ground-truth oracle for fwt.
WalshSpectrum walsh_naive(const TruthTable& f);

/// In-place O(N log N) butterfly over a +/-1 vector already loaded into v.
void fwt_inplace(std::vector<int32_t>& v);

/// Fast Walsh transform of a function, n <= 20.
WalshSpectrum fwt(const TruthTable& f);

/// nl(f) = 2^(n-1) - max_w |W_f(w)| / 2, computed over the fwt spectrum.
int nonlinearity(const TruthTable& f);

/// Literal minimum Hamming distance to the 2^(n+1) affine functions,
/// guarded to n <= 12. Must agree with nonlinearity() everywhere.
int nonlinearity_bruteforce(const TruthTable& f);

/// Distances to all affine functions in affine_functions() order:
/// index w holds 2^(n-1) - W_f(w)/2, index w + 2^n holds 2^(n-1) + W_f(w)/2.
std::vector<int32_t> affine_distances(const TruthTable& f);

/// "w<TAB>W_f(w)" per line, decimal.
std::string spectrum_dump(const WalshSpectrum& s);

}  // namespace bnl
