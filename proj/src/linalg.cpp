#include "curvepat/linalg.hpp"

#include <algorithm>

namespace curvepat {

namespace {

using IntMatrix = std::vector<std::vector<Integer>>;

// clear denominators row by row
IntMatrix to_integer(const RatMatrix& m) {
  IntMatrix a(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) {
    Integer l = 1;
    for (const Rational& q : m[i]) mpz_lcm(l.get_mpz_t(), l.get_mpz_t(), q.get_den().get_mpz_t());
    a[i].reserve(m[i].size());
    for (const Rational& q : m[i]) {
      Rational v = q * Rational(l);
      a[i].push_back(v.get_num());
    }
  }
  return a;
}

struct Echelon {
  IntMatrix a;                      // fraction-free row echelon form
  std::vector<std::size_t> pivots;  // pivot column per pivot row
};

// Bareiss fraction-free elimination with column pivot search; divisions are
// exact, keeping entries polynomially bounded
Echelon bareiss(IntMatrix a) {
  const std::size_t rows = a.size();
  const std::size_t cols = rows ? a[0].size() : 0;
  Echelon e;
  Integer prev = 1;
  std::size_t r = 0;
  for (std::size_t c = 0; c < cols && r < rows; ++c) {
    std::size_t piv = r;
    while (piv < rows && a[piv][c] == 0) ++piv;
    if (piv == rows) continue;
    std::swap(a[r], a[piv]);
    for (std::size_t i = r + 1; i < rows; ++i) {
      for (std::size_t j = c + 1; j < cols; ++j) {
        Integer t = a[r][c] * a[i][j] - a[i][c] * a[r][j];
        mpz_divexact(a[i][j].get_mpz_t(), t.get_mpz_t(), prev.get_mpz_t());
      }
      a[i][c] = 0;
    }
    prev = a[r][c];
    e.pivots.push_back(c);
    ++r;
  }
  e.a = std::move(a);
  return e;
}

void normalize_vector(std::vector<Rational>& v) {
  Integer l = 1;
  for (const Rational& q : v) mpz_lcm(l.get_mpz_t(), l.get_mpz_t(), q.get_den().get_mpz_t());
  Integer g = 0;
  for (Rational& q : v) {
    q *= Rational(l);
    mpz_gcd(g.get_mpz_t(), g.get_mpz_t(), q.get_num().get_mpz_t());
  }
  if (g == 0) return;
  int lead_sign = 0;
  for (Rational& q : v) {
    q /= Rational(g);
    if (lead_sign == 0) lead_sign = sgn(q);
  }
  if (lead_sign < 0)
    for (Rational& q : v) q = -q;
}

}  // namespace

long rat_rank(const RatMatrix& m) {
  if (m.empty()) return 0;
  return static_cast<long>(bareiss(to_integer(m)).pivots.size());
}

NullspaceResult nullspace(const RatMatrix& m) {
  NullspaceResult out;
  if (m.empty()) return out;
  const std::size_t cols = m[0].size();
  Echelon e = bareiss(to_integer(m));
  out.rank = static_cast<long>(e.pivots.size());
  std::vector<bool> is_pivot(cols, false);
  for (std::size_t c : e.pivots) is_pivot[c] = true;
  for (std::size_t free_c = 0; free_c < cols; ++free_c) {
    if (is_pivot[free_c]) continue;
    std::vector<Rational> v(cols, Rational(0));
    v[free_c] = 1;
    // back-substitution through the echelon rows
    for (std::size_t pr = e.pivots.size(); pr-- > 0;) {
      const std::size_t pc = e.pivots[pr];
      Rational acc = 0;
      for (std::size_t j = pc + 1; j < cols; ++j)
        if (v[j] != 0) acc += Rational(e.a[pr][j]) * v[j];
      v[pc] = -acc / Rational(e.a[pr][pc]);
    }
    normalize_vector(v);
    out.basis.push_back(std::move(v));
  }
  return out;
}

}  // namespace curvepat
