#pragma once

#include <string>
#include <vector>

#include "curvepat/rational.hpp"

namespace curvepat {

// Exact arithmetic in the field Q(beta), beta = 2^{-1/q}, so beta^q = 1/2.
// x^q - 1/2 is irreducible over Q (Eisenstein at 2 after reversing), hence
// {1, beta, ..., beta^{q-1}} is a Q-basis and an element is zero iff all of
// its coordinates vanish.  This is the natural home of quantities like
// ell(Q)^s = 2^{-js} for rational s = p/q: they stay exact instead of being
// rounded.  q = 1 is plain rational arithmetic and takes fast paths.
class Alg2 {
public:
  explicit Alg2(long q = 1);
  Alg2(const Rational& r, long q);
  Alg2(long v, long q);

  // 2^e with q inferred from (or supplied as a multiple of) den(e).
  static Alg2 pow2(const Rational& e);
  static Alg2 pow2(const Rational& e, long q);

  long q() const { return q_; }
  const std::vector<Rational>& coeffs() const { return c_; }

  bool is_zero() const;
  bool is_rational() const;
  Rational as_rational() const;

  Alg2 operator-() const;
  Alg2 operator+(const Alg2& o) const;
  Alg2 operator-(const Alg2& o) const;
  Alg2 operator*(const Alg2& o) const;
  Alg2 operator/(const Alg2& o) const;
  Alg2 inverse() const;

  Alg2& operator+=(const Alg2& o) { return *this = *this + o; }
  Alg2& operator-=(const Alg2& o) { return *this = *this - o; }
  Alg2& operator*=(const Alg2& o) { return *this = *this * o; }

  // Exact sign via interval refinement of beta; never wrong, always halts.
  int sign() const;
  bool operator==(const Alg2& o) const;
  bool operator!=(const Alg2& o) const { return !(*this == o); }
  bool operator<(const Alg2& o) const { return (*this - o).sign() < 0; }
  bool operator<=(const Alg2& o) const { return (*this - o).sign() <= 0; }
  bool operator>(const Alg2& o) const { return (*this - o).sign() > 0; }
  bool operator>=(const Alg2& o) const { return (*this - o).sign() >= 0; }

  double to_double() const;
  std::string str() const;

  // Embed into Q(2^{-1/qq}); qq must be a multiple of q.
  Alg2 promoted(long qq) const;

private:
  long q_ = 1;
  std::vector<Rational> c_;  // value = sum c_[i] * beta^i, size q_
};

Alg2 min(const Alg2& a, const Alg2& b);
Alg2 max(const Alg2& a, const Alg2& b);

}  // namespace curvepat
