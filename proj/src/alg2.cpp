#include "curvepat/alg2.hpp"

#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "curvepat/polynomial.hpp"

namespace curvepat {

Alg2::Alg2(long q) : q_(q), c_(static_cast<size_t>(q), Rational(0)) {
  if (q < 1) throw std::invalid_argument("Alg2: q must be >= 1");
}

Alg2::Alg2(const Rational& r, long q) : Alg2(q) { c_[0] = r; }

Alg2::Alg2(long v, long q) : Alg2(Rational(v), q) {}

Alg2 Alg2::pow2(const Rational& e) {
  Rational r = e;
  r.canonicalize();
  return pow2(r, r.get_den().fits_slong_p() ? r.get_den().get_si() : -1);
}

Alg2 Alg2::pow2(const Rational& e, long q) {
  Rational r = e;
  r.canonicalize();
  if (q < 1 || !r.get_den().fits_slong_p() || q % r.get_den().get_si() != 0)
    throw std::invalid_argument("Alg2::pow2: denominator of exponent must divide q");
  // 2^{p/qden} = beta^{-p * (q/qden)} with beta^q = 1/2.
  if (!r.get_num().fits_slong_p())
    throw std::invalid_argument("Alg2::pow2: exponent numerator too large");
  long p = r.get_num().get_si() * (q / r.get_den().get_si());
  long k = -p;  // beta exponent
  long base = k >= 0 ? k / q : -((-k + q - 1) / q);
  long rem = k - base * q;  // in [0, q)
  Alg2 out(q);
  out.c_[static_cast<size_t>(rem)] = pow2q(-base);
  return out;
}

bool Alg2::is_zero() const {
  for (const auto& x : c_)
    if (sgn(x) != 0) return false;
  return true;
}

bool Alg2::is_rational() const {
  for (size_t i = 1; i < c_.size(); ++i)
    if (sgn(c_[i]) != 0) return false;
  return true;
}

Rational Alg2::as_rational() const {
  if (!is_rational()) throw std::logic_error("Alg2::as_rational: not rational");
  return c_[0];
}

Alg2 Alg2::promoted(long qq) const {
  if (qq == q_) return *this;
  if (qq < q_ || qq % q_ != 0)
    throw std::invalid_argument("Alg2::promoted: target q must be a multiple");
  long k = qq / q_;
  Alg2 out(qq);
  for (size_t i = 0; i < c_.size(); ++i) out.c_[i * static_cast<size_t>(k)] = c_[i];
  return out;
}

namespace {
long common_q(long a, long b) { return std::lcm(a, b); }
}  // namespace

Alg2 Alg2::operator-() const {
  Alg2 out = *this;
  for (auto& x : out.c_) x = -x;
  return out;
}

Alg2 Alg2::operator+(const Alg2& o) const {
  long q = common_q(q_, o.q_);
  Alg2 a = promoted(q), b = o.promoted(q), out(q);
  for (size_t i = 0; i < out.c_.size(); ++i) out.c_[i] = a.c_[i] + b.c_[i];
  return out;
}

Alg2 Alg2::operator-(const Alg2& o) const { return *this + (-o); }

Alg2 Alg2::operator*(const Alg2& o) const {
  long q = common_q(q_, o.q_);
  Alg2 a = promoted(q), b = o.promoted(q), out(q);
  // Convolution with the reduction beta^q = 1/2.
  for (size_t i = 0; i < a.c_.size(); ++i) {
    if (sgn(a.c_[i]) == 0) continue;
    for (size_t j = 0; j < b.c_.size(); ++j) {
      if (sgn(b.c_[j]) == 0) continue;
      size_t k = i + j;
      Rational term = a.c_[i] * b.c_[j];
      if (k >= static_cast<size_t>(q)) {
        k -= static_cast<size_t>(q);
        term /= 2;
      }
      out.c_[k] += term;
    }
  }
  return out;
}

Alg2 Alg2::inverse() const {
  if (is_zero()) throw std::domain_error("Alg2::inverse: zero element");
  if (q_ == 1) {
    Alg2 out(1);
    out.c_[0] = Rational(1) / c_[0];
    return out;
  }
  // Extended Euclid in Q[x] for a(x) against m(x) = x^q - 1/2: since m is
  // irreducible and deg a < q, gcd is a nonzero constant g with
  // u*a + v*m = g, so a^{-1} = u/g mod m.
  RatPoly a(c_);
  std::vector<Rational> mc(static_cast<size_t>(q_) + 1, Rational(0));
  mc[0] = Rational(-1, 2);
  mc.back() = 1;
  RatPoly m(mc);
  RatPoly r0 = m, r1 = a;
  RatPoly u0 = RatPoly::constant(0), u1 = RatPoly::constant(1);
  while (r1.degree() > 0) {
    auto [qpoly, rem] = r0.divmod(r1);
    RatPoly u2 = u0 - qpoly * u1;
    r0 = r1;
    r1 = rem;
    u0 = u1;
    u1 = u2;
  }
  if (r1.is_zero() || r1.degree() != 0)
    throw std::logic_error("Alg2::inverse: gcd not constant");
  Rational g = r1.coeff(0);
  RatPoly u = u1;  // u*a == g (mod m)
  Alg2 out(q_);
  for (long i = 0; i <= u.degree() && i < q_; ++i) out.c_[static_cast<size_t>(i)] = u.coeff(i) / g;
  return out;
}

Alg2 Alg2::operator/(const Alg2& o) const { return *this * o.inverse(); }

int Alg2::sign() const {
  if (is_zero()) return 0;
  if (q_ == 1) return sgn(c_[0]);
  // beta in (1/2, 1); refine [lo, hi] by bisection on x^q = 1/2 until the
  // interval evaluation of sum c_i beta^i has a definite sign.
  Rational lo(1, 2), hi(1);
  for (int iter = 0; iter < 20000; ++iter) {
    Rational vmin(0), vmax(0);
    Rational plo(1), phi(1);  // beta^i bounds
    for (size_t i = 0; i < c_.size(); ++i) {
      if (i > 0) {
        plo *= lo;
        phi *= hi;
      }
      if (sgn(c_[i]) >= 0) {
        vmin += c_[i] * plo;
        vmax += c_[i] * phi;
      } else {
        vmin += c_[i] * phi;
        vmax += c_[i] * plo;
      }
    }
    if (sgn(vmin) > 0) return 1;
    if (sgn(vmax) < 0) return -1;
    Rational mid = (lo + hi) / 2;
    Rational mq = rat_pow(mid, q_);
    if (mq > Rational(1, 2))
      hi = mid;
    else
      lo = mid;
  }
  throw std::logic_error("Alg2::sign: refinement did not converge");
}

bool Alg2::operator==(const Alg2& o) const { return (*this - o).is_zero(); }

double Alg2::to_double() const {
  double beta = std::pow(2.0, -1.0 / static_cast<double>(q_));
  double acc = 0, p = 1;
  for (size_t i = 0; i < c_.size(); ++i) {
    acc += c_[i].get_d() * p;
    p *= beta;
  }
  return acc;
}

std::string Alg2::str() const {
  if (is_rational()) return rat_str(c_[0]);
  std::ostringstream os;
  bool first = true;
  for (size_t i = 0; i < c_.size(); ++i) {
    if (sgn(c_[i]) == 0) continue;
    if (!first) os << " + ";
    os << rat_str(c_[i]);
    if (i > 0) os << "*2^(-" << i << "/" << q_ << ")";
    first = false;
  }
  if (first) os << "0";
  return os.str();
}

Alg2 min(const Alg2& a, const Alg2& b) { return a <= b ? a : b; }
Alg2 max(const Alg2& a, const Alg2& b) { return a >= b ? a : b; }

}  // namespace curvepat
