#pragma once

// Brute-force reference computations shared by the tests. Nothing here calls
// the library code it is used to check.

#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <algorithm>
#include <random>
#include <string>
#include <vector>

#include <gmpxx.h>

namespace oracle {

// e bracketed by partial sums of 1/k!: lo = sum_{k<=K}, hi = lo + 2/(K+1)!.
inline std::pair<mpq_class, mpq_class> e_bounds(int K = 40) {
  mpq_class lo = 0, term = 1;
  for (int k = 0; k <= K; ++k) {
    if (k) term /= k;
    lo += term;
  }
  return {lo, lo + 2 * term / (K + 1)};
}

inline mpz_class ceil_q(const mpq_class& q) {
  mpz_class r;
  mpz_cdiv_q(r.get_mpz_t(), q.get_num_mpz_t(), q.get_den_mpz_t());
  return r;
}

// iota_1 = 2, iota_{n+1} = ceil(e iota_n) + 1, with exact bracketing.
inline std::vector<mpz_class> harm_blocks(int count) {
  const auto [lo, hi] = e_bounds();
  std::vector<mpz_class> out = {2};
  while (static_cast<int>(out.size()) < count) {
    const mpz_class a = ceil_q(lo * out.back()), b = ceil_q(hi * out.back());
    if (a != b) throw std::runtime_error("e bracket too wide");
    out.push_back(a + 1);
  }
  return out;
}

// ceil(e^n), exact bracketing.
inline mpz_class ceil_exp(int n) {
  const auto [lo, hi] = e_bounds();
  mpq_class a = 1, b = 1;
  for (int i = 0; i < n; ++i) {
    a *= lo;
    b *= hi;
  }
  const mpz_class ca = ceil_q(a), cb = ceil_q(b);
  if (ca != cb) throw std::runtime_error("e bracket too wide");
  return ca;
}

inline std::uint64_t ilog2(std::uint64_t n) {
  std::uint64_t j = 0;
  while (n >>= 1) ++j;
  return j;
}

inline bool is_square(std::uint64_t n) {
  std::uint64_t r = static_cast<std::uint64_t>(std::sqrt(static_cast<double>(n)));
  while (r * r > n) --r;
  while ((r + 1) * (r + 1) <= n) ++r;
  return r * r == n;
}

// d(A, n) max over [ceil(n/2), n] from an indicator.
inline double window_density(const std::function<bool(std::uint64_t)>& in, std::uint64_t N) {
  std::vector<std::uint64_t> cnt(N + 1, 0);
  for (std::uint64_t n = 1; n <= N; ++n) cnt[n] = cnt[n - 1] + (in(n) ? 1 : 0);
  double best = 0;
  for (std::uint64_t n = (N + 1) / 2; n <= N; ++n) best = std::max(best, static_cast<double>(cnt[n]) / n);
  return best;
}

// Distinct rationals p/q in (0,1) in the enumeration order q = 2, 3, ...,
// p = 1..q-1, skipping non-reduced fractions.
inline std::vector<mpq_class> rationals01(std::size_t count) {
  std::vector<mpq_class> out;
  for (unsigned long q = 2; out.size() < count; ++q)
    for (unsigned long p = 1; p < q && out.size() < count; ++p)
      if (std::gcd(p, q) == 1) out.emplace_back(mpz_class(p), mpz_class(q));
  return out;
}

}  // namespace oracle
