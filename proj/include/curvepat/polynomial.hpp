#pragma once

#include <optional>
#include <string>
#include <vector>

#include "curvepat/errors.hpp"
#include "curvepat/rational.hpp"

namespace curvepat {

// Univariate polynomial with exact rational coefficients, coeff[k] is the
// coefficient of t^k.  No trailing zeros; the zero polynomial is empty.
class RatPoly {
 public:
  RatPoly() = default;
  explicit RatPoly(std::vector<Rational> coeffs) : c_(std::move(coeffs)) { trim(); }
  static RatPoly constant(Rational v);
  static RatPoly monomial(const Rational& coeff, std::size_t deg);

  bool is_zero() const { return c_.empty(); }
  // degree of the zero polynomial is -1 by convention
  long degree() const { return static_cast<long>(c_.size()) - 1; }
  const std::vector<Rational>& coeffs() const { return c_; }
  Rational coeff(std::size_t k) const { return k < c_.size() ? c_[k] : Rational(0); }
  const Rational& lead() const { return c_.back(); }

  Rational operator()(const Rational& t) const;
  double eval_double(double t) const;

  RatPoly operator-() const;
  RatPoly operator+(const RatPoly& o) const;
  RatPoly operator-(const RatPoly& o) const;
  RatPoly operator*(const RatPoly& o) const;
  RatPoly operator*(const Rational& s) const;
  bool operator==(const RatPoly& o) const { return c_ == o.c_; }

  // p(q(t)) by Horner over polynomials
  RatPoly compose(const RatPoly& inner) const;
  // p(t + t0)
  RatPoly taylor_shift(const Rational& t0) const;
  // p(a*t)
  RatPoly scale_arg(const Rational& a) const;

  RatPoly derivative(unsigned k = 1) const;
  // quotient and remainder of *this by divisor
  std::pair<RatPoly, RatPoly> divmod(const RatPoly& divisor) const;
  RatPoly monic() const;
  // p / gcd(p, p'), monic
  RatPoly squarefree_part() const;
  // lowest index with nonzero coefficient; nullopt for the zero polynomial
  std::optional<std::size_t> vanishing_order() const;

  std::string render() const;

 private:
  void trim();
  std::vector<Rational> c_;
};

inline RatPoly operator*(const Rational& s, const RatPoly& p) { return p * s; }

RatPoly parse_poly(const std::string& text);

struct AllZero : DomainError {
  AllZero() : DomainError("all input polynomials are zero") {}
};
struct ZeroPolynomial : DomainError {
  ZeroPolynomial() : DomainError("zero polynomial") {}
};

// monic gcd of all inputs
RatPoly poly_gcd(const std::vector<RatPoly>& ps);

struct SturmSequence {
  std::vector<RatPoly> polys;
  // sign changes of the sequence evaluated at t
  int sign_changes(const Rational& t) const;
};

SturmSequence sturm_sequence(const RatPoly& p);

// distinct real roots of p in the closed interval [a, b]
long sturm_root_count(const RatPoly& p, const Rational& a, const Rational& b);

// A real algebraic number: either an exact rational or an open isolating
// interval (lo, hi) containing exactly one root of the defining polynomial.
struct RootLoc {
  bool exact;
  Rational value;    // meaningful when exact
  Rational lo, hi;   // isolating interval; equals [value, value] when exact
  double approx() const;
};

// Distinct real roots of p in [a, b], sorted increasing.  Rational roots are
// reported exactly; irrational roots as isolating intervals of width <= tol.
std::vector<RootLoc> isolate_roots(const RatPoly& p, const Rational& a, const Rational& b,
                                   const Rational& tol = pow2q(-40));

struct LinearRelations {
  long rank = 0;
  // each u satisfies sum_i u[i] * ps[i] == 0 exactly; entries are coprime
  // integers with positive first nonzero entry
  std::vector<std::vector<Rational>> nullspace_basis;
};

LinearRelations linear_relations(const std::vector<RatPoly>& ps);

}  // namespace curvepat
