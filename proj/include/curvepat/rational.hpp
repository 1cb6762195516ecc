#pragma once

#include <gmpxx.h>

#include <string>

namespace curvepat {

using Rational = mpq_class;
using Integer = mpz_class;

inline Rational make_rational(long num, unsigned long den = 1) {
  Rational q(num, den);
  q.canonicalize();
  return q;
}

// 2^e as an exact rational, e may be negative.
inline Rational pow2q(long e) {
  Rational q = 1;
  if (e >= 0)
    mpz_ui_pow_ui(q.get_num_mpz_t(), 2u, static_cast<unsigned long>(e));
  else
    mpz_ui_pow_ui(q.get_den_mpz_t(), 2u, static_cast<unsigned long>(-e));
  return q;
}

inline Rational rat_pow(const Rational& base, unsigned long e) {
  Rational r = 1;
  Rational b = base;
  while (e) {
    if (e & 1) r *= b;
    b *= b;
    e >>= 1;
  }
  return r;
}

inline Rational rat_abs(const Rational& q) { return q < 0 ? Rational(-q) : q; }

inline std::string rat_str(const Rational& q) { return q.get_str(); }

inline int sgn(const Rational& q) { return ::sgn(q); }

}  // namespace curvepat
