// Test-only reference implementations, kept deliberately naive and
// independent of the library's transform paths.
#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "bnl/network.hpp"
#include "bnl/truth_table.hpp"
#include "bnl/walsh.hpp"

namespace oracles {

inline int popcount_loop(uint64_t v) {
  int c = 0;
  while (v) {
    c += int(v & 1);
    v >>= 1;
  }
  return c;
}

// ANF by the literal subset XOR: a_m = xor over s subset-of m of f(s).
inline bnl::AnfCoefficients anf_subset(const bnl::TruthTable& f) {
  bnl::AnfCoefficients a(f.arity());
  for (size_t m = 0; m < f.size(); ++m) {
    int acc = 0;
    for (size_t s = 0; s < f.size(); ++s)
      if ((s & m) == s) acc ^= f.bit(s);
    a.set_coeff(m, acc);
  }
  return a;
}

// Evaluate an ANF at one input: the monomial with variable set m is 1 at x
// iff every variable of m is set in x.
inline int anf_eval(const bnl::AnfCoefficients& a, size_t x) {
  int acc = 0;
  for (size_t m = 0; m < a.size(); ++m)
    if (a.coeff(m) && (m & x) == m) acc ^= 1;
  return acc;
}

// Enumerate a0 xor a1*x1 xor ... xor an*xn directly; variable x_j reads bit
// (n-j) of the input index, matching the library-wide convention.
inline std::vector<bnl::TruthTable> affine_enum(int n) {
  std::vector<bnl::TruthTable> out;
  for (int a0 = 0; a0 <= 1; ++a0) {
    for (uint32_t coeffs = 0; coeffs < (uint32_t(1) << n); ++coeffs) {
      // coeffs bit (j-1) is a_j for variable x_j
      bnl::TruthTable t(n);
      for (size_t x = 0; x < t.size(); ++x) {
        int v = a0;
        for (int j = 1; j <= n; ++j) {
          int aj = int((coeffs >> (j - 1)) & 1);
          int xj = int((x >> (n - j)) & 1);
          v ^= aj & xj;
        }
        t.set_bit(x, v);
      }
      out.push_back(t);
    }
  }
  return out;
}

// Sylvester recursion, entry-by-entry.
inline std::vector<std::vector<int>> sylvester(int order) {
  std::vector<std::vector<int>> h{{1}};
  int k = 1;
  while (k < order) {
    std::vector<std::vector<int>> next(2 * k, std::vector<int>(2 * k));
    for (int r = 0; r < k; ++r)
      for (int c = 0; c < k; ++c) {
        next[r][c] = h[r][c];
        next[r][c + k] = h[r][c];
        next[r + k][c] = h[r][c];
        next[r + k][c + k] = -h[r][c];
      }
    h = std::move(next);
    k *= 2;
  }
  return h;
}

// Rank by double-precision Gaussian elimination; adequate for tiny inputs.
inline int rank_float(std::vector<std::vector<double>> a) {
  size_t m = a.size(), n = a[0].size();
  size_t r = 0;
  for (size_t c = 0; c < n && r < m; ++c) {
    size_t piv = r;
    for (size_t i = r + 1; i < m; ++i)
      if (std::abs(a[i][c]) > std::abs(a[piv][c])) piv = i;
    if (std::abs(a[piv][c]) < 1e-9) continue;
    std::swap(a[piv], a[r]);
    for (size_t i = 0; i < m; ++i) {
      if (i == r) continue;
      double f = a[i][c] / a[r][c];
      for (size_t j = c; j < n; ++j) a[i][j] -= f * a[r][j];
    }
    ++r;
  }
  return int(r);
}

// Central finite differences over every dense parameter of the per-example
// squared-error loss.
inline bnl::Gradients numeric_gradients(bnl::Network& net, const std::vector<double>& input,
                                        const std::vector<double>& target, double step) {
  auto loss_at = [&]() {
    std::vector<double> out = net.forward(input);
    return bnl::mse_loss(out, target);
  };
  bnl::Gradients g = bnl::zero_gradients(net);
  for (int l = 0; l < net.dense_count(); ++l) {
    bnl::DenseParams& p = net.dense(l);
    for (size_t i = 0; i < p.w.data.size(); ++i) {
      double keep = p.w.data[i];
      p.w.data[i] = keep + step;
      double up = loss_at();
      p.w.data[i] = keep - step;
      double down = loss_at();
      p.w.data[i] = keep;
      g.dw[size_t(l)].data[i] = (up - down) / (2 * step);
    }
    for (size_t i = 0; i < p.b.size(); ++i) {
      double keep = p.b[i];
      p.b[i] = keep + step;
      double up = loss_at();
      p.b[i] = keep - step;
      double down = loss_at();
      p.b[i] = keep;
      g.db[size_t(l)][i] = (up - down) / (2 * step);
    }
  }
  return g;
}

inline bool gradients_close(const bnl::Gradients& a, const bnl::Gradients& b, double rel) {
  for (size_t l = 0; l < a.dw.size(); ++l) {
    for (size_t i = 0; i < a.dw[l].data.size(); ++i) {
      double x = a.dw[l].data[i], y = b.dw[l].data[i];
      if (std::abs(x - y) > rel * std::max({1.0, std::abs(x), std::abs(y)})) return false;
    }
    for (size_t i = 0; i < a.db[l].size(); ++i) {
      double x = a.db[l][i], y = b.db[l][i];
      if (std::abs(x - y) > rel * std::max({1.0, std::abs(x), std::abs(y)})) return false;
    }
  }
  return true;
}

}  // namespace oracles
