#include "curvepat/polynomial.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "curvepat/linalg.hpp"

namespace curvepat {

void RatPoly::trim() {
  while (!c_.empty() && c_.back() == 0) c_.pop_back();
}

RatPoly RatPoly::constant(Rational v) {
  RatPoly p;
  if (v != 0) p.c_.push_back(std::move(v));
  return p;
}

RatPoly RatPoly::monomial(const Rational& coeff, std::size_t deg) {
  RatPoly p;
  if (coeff != 0) {
    p.c_.assign(deg + 1, Rational(0));
    p.c_[deg] = coeff;
  }
  return p;
}

Rational RatPoly::operator()(const Rational& t) const {
  Rational acc = 0;
  for (auto it = c_.rbegin(); it != c_.rend(); ++it) acc = acc * t + *it;
  return acc;
}

double RatPoly::eval_double(double t) const {
  double acc = 0;
  for (auto it = c_.rbegin(); it != c_.rend(); ++it) acc = acc * t + it->get_d();
  return acc;
}

RatPoly RatPoly::operator-() const {
  RatPoly r = *this;
  for (auto& c : r.c_) c = -c;
  return r;
}

RatPoly RatPoly::operator+(const RatPoly& o) const {
  std::vector<Rational> r(std::max(c_.size(), o.c_.size()), Rational(0));
  for (std::size_t i = 0; i < c_.size(); ++i) r[i] += c_[i];
  for (std::size_t i = 0; i < o.c_.size(); ++i) r[i] += o.c_[i];
  return RatPoly(std::move(r));
}

RatPoly RatPoly::operator-(const RatPoly& o) const { return *this + (-o); }

RatPoly RatPoly::operator*(const RatPoly& o) const {
  if (is_zero() || o.is_zero()) return RatPoly();
  std::vector<Rational> r(c_.size() + o.c_.size() - 1, Rational(0));
  for (std::size_t i = 0; i < c_.size(); ++i)
    for (std::size_t j = 0; j < o.c_.size(); ++j) r[i + j] += c_[i] * o.c_[j];
  return RatPoly(std::move(r));
}

RatPoly RatPoly::operator*(const Rational& s) const {
  RatPoly r = *this;
  for (auto& c : r.c_) c *= s;
  r.trim();
  return r;
}

RatPoly RatPoly::compose(const RatPoly& inner) const {
  RatPoly acc;
  for (auto it = c_.rbegin(); it != c_.rend(); ++it)
    acc = acc * inner + RatPoly::constant(*it);
  return acc;
}

RatPoly RatPoly::taylor_shift(const Rational& t0) const {
  if (t0 == 0) return *this;
  // Horner form of p(t + t0): synthetic division chain
  std::vector<Rational> a = c_;
  const std::size_t n = a.size();
  for (std::size_t k = 0; k + 1 < n; ++k)
    for (std::size_t i = n - 1; i > k; --i) a[i - 1] += t0 * a[i];
  return RatPoly(std::move(a));
}

RatPoly RatPoly::scale_arg(const Rational& a) const {
  std::vector<Rational> r = c_;
  Rational f = 1;
  for (std::size_t i = 1; i < r.size(); ++i) {
    f *= a;
    r[i] *= f;
  }
  return RatPoly(std::move(r));
}

RatPoly RatPoly::derivative(unsigned k) const {
  std::vector<Rational> r = c_;
  for (unsigned pass = 0; pass < k; ++pass) {
    if (r.empty()) break;
    for (std::size_t i = 1; i < r.size(); ++i) r[i - 1] = Rational(static_cast<long>(i)) * r[i];
    r.pop_back();
  }
  return RatPoly(std::move(r));
}

std::pair<RatPoly, RatPoly> RatPoly::divmod(const RatPoly& divisor) const {
  if (divisor.is_zero()) throw ZeroPolynomial();
  std::vector<Rational> rem = c_;
  const long dd = divisor.degree();
  if (degree() < dd) return {RatPoly(), *this};
  std::vector<Rational> quo(static_cast<std::size_t>(degree() - dd) + 1, Rational(0));
  for (long k = degree(); k >= dd; --k) {
    Rational q = rem[static_cast<std::size_t>(k)] / divisor.lead();
    if (q == 0) continue;
    quo[static_cast<std::size_t>(k - dd)] = q;
    for (long j = 0; j <= dd; ++j)
      rem[static_cast<std::size_t>(k - dd + j)] -= q * divisor.coeff(static_cast<std::size_t>(j));
  }
  return {RatPoly(std::move(quo)), RatPoly(std::move(rem))};
}

RatPoly RatPoly::monic() const {
  if (is_zero()) return *this;
  return *this * Rational(1 / lead());
}

RatPoly RatPoly::squarefree_part() const {
  if (is_zero()) throw ZeroPolynomial();
  if (degree() == 0) return RatPoly::constant(1);
  RatPoly g = poly_gcd({*this, derivative()});
  return divmod(g).first.monic();
}

std::optional<std::size_t> RatPoly::vanishing_order() const {
  for (std::size_t i = 0; i < c_.size(); ++i)
    if (c_[i] != 0) return i;
  return std::nullopt;
}

std::string RatPoly::render() const {
  if (is_zero()) return "0";
  std::ostringstream os;
  bool first = true;
  for (long k = degree(); k >= 0; --k) {
    const Rational& c = c_[static_cast<std::size_t>(k)];
    if (c == 0) continue;
    Rational a = rat_abs(c);
    if (first) {
      if (c < 0) os << "-";
      first = false;
    } else {
      os << (c < 0 ? " - " : " + ");
    }
    const bool unit = (a == 1 && k > 0);
    if (!unit) os << a.get_str();
    if (k > 0) {
      if (!unit) os << "*";
      os << "t";
      if (k > 1) os << "^" << k;
    }
  }
  return os.str();
}

namespace {

class Parser {
 public:
  explicit Parser(const std::string& s) : s_(s) {}

  RatPoly run() {
    RatPoly p = expr();
    skip_ws();
    if (pos_ != s_.size()) throw SyntaxError("unexpected trailing input", pos_);
    return p;
  }

 private:
  const std::string& s_;
  std::size_t pos_ = 0;

  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  int peek() {
    skip_ws();
    return pos_ < s_.size() ? static_cast<unsigned char>(s_[pos_]) : -1;
  }

  RatPoly expr() {
    // leading sign accepted (strict superset of the grammar)
    int sign = 1;
    int c = peek();
    if (c == '+' || c == '-') {
      ++pos_;
      if (c == '-') sign = -1;
    }
    RatPoly acc = term() * Rational(sign);
    while (true) {
      c = peek();
      if (c == '+' || c == '-') {
        ++pos_;
        RatPoly t = term();
        acc = (c == '+') ? acc + t : acc - t;
      } else {
        break;
      }
    }
    return acc;
  }

  bool starts_factor(int c) const {
    return c == '(' || c == 't' || std::isdigit(c);
  }

  RatPoly term() {
    RatPoly acc = factor();
    while (true) {
      int c = peek();
      if (c == '*') {
        ++pos_;
        acc = acc * factor();
      } else if (c >= 0 && starts_factor(c)) {
        acc = acc * factor();  // implicit multiplication, e.g. "2t^3"
      } else {
        break;
      }
    }
    return acc;
  }

  RatPoly factor() {
    int c = peek();
    if (c < 0) throw SyntaxError("unexpected end of input", pos_);
    if (c == '(') {
      ++pos_;
      RatPoly p = expr();
      if (peek() != ')') throw SyntaxError("expected ')'", pos_);
      ++pos_;
      return p;
    }
    if (c == 't') {
      ++pos_;
      unsigned long e = 1;
      if (peek() == '^') {
        ++pos_;
        e = parse_uint();
      }
      return RatPoly::monomial(1, e);
    }
    if (std::isdigit(c)) return RatPoly::constant(parse_rational());
    if (std::isalpha(c)) throw UnsupportedVariable(static_cast<char>(c), pos_);
    throw SyntaxError(std::string("unexpected character '") + static_cast<char>(c) + "'", pos_);
  }

  unsigned long parse_uint() {
    int c = peek();
    if (c < 0 || !std::isdigit(c)) throw SyntaxError("expected unsigned integer", pos_);
    std::string digits;
    while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) digits += s_[pos_++];
    return std::stoul(digits);
  }

  Integer parse_int_digits() {
    int c = peek();
    if (c < 0 || !std::isdigit(c)) throw SyntaxError("expected integer", pos_);
    std::string digits;
    while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) digits += s_[pos_++];
    return Integer(digits);
  }

  Rational parse_rational() {
    Integer num = parse_int_digits();
    if (peek() == '/') {
      ++pos_;
      Integer den = parse_int_digits();
      if (den == 0) throw SyntaxError("zero denominator", pos_);
      Rational q(num, den);
      q.canonicalize();
      return q;
    }
    return Rational(num);
  }
};

}  // namespace

RatPoly parse_poly(const std::string& text) { return Parser(text).run(); }

RatPoly poly_gcd(const std::vector<RatPoly>& ps) {
  RatPoly g;
  for (const RatPoly& p : ps) {
    if (p.is_zero()) continue;
    if (g.is_zero()) {
      g = p.monic();
      continue;
    }
    RatPoly a = g, b = p;
    while (!b.is_zero()) {
      RatPoly r = a.divmod(b).second;
      a = b;
      b = std::move(r);
    }
    g = a.monic();
    if (g.degree() == 0) return g;  // coprime already
  }
  if (g.is_zero()) throw AllZero();
  return g;
}

int SturmSequence::sign_changes(const Rational& t) const {
  int changes = 0, prev = 0;
  for (const RatPoly& p : polys) {
    int s = sgn(p(t));
    if (s != 0) {
      if (prev != 0 && s != prev) ++changes;
      prev = s;
    }
  }
  return changes;
}

SturmSequence sturm_sequence(const RatPoly& p) {
  if (p.is_zero()) throw ZeroPolynomial();
  SturmSequence seq;
  seq.polys.push_back(p);
  if (p.degree() >= 1) {
    seq.polys.push_back(p.derivative());
    while (seq.polys.back().degree() >= 1) {
      const RatPoly& a = seq.polys[seq.polys.size() - 2];
      const RatPoly& b = seq.polys.back();
      RatPoly r = a.divmod(b).second;
      if (r.is_zero()) break;
      seq.polys.push_back(-r);
    }
  }
  return seq;
}

namespace {

// distinct roots of squarefree q in the half-open interval (a, b]
long sturm_count_half_open(const SturmSequence& seq, const Rational& a, const Rational& b) {
  return seq.sign_changes(a) - seq.sign_changes(b);
}

}  // namespace

long sturm_root_count(const RatPoly& p, const Rational& a, const Rational& b) {
  if (p.is_zero()) throw ZeroPolynomial();
  if (a > b) throw PreconditionError("sturm_root_count: a > b");
  if (p.degree() == 0) return 0;
  RatPoly q = p.squarefree_part();
  if (a == b) return p(a) == 0 ? 1 : 0;
  SturmSequence seq = sturm_sequence(q);
  long n = sturm_count_half_open(seq, a, b);
  if (p(a) == 0) ++n;  // closed-interval convention: count the left endpoint too
  return n;
}

namespace {

void isolate_rec(const SturmSequence& seq, const RatPoly& q, Rational lo, Rational hi,
                 long count, const Rational& tol, std::vector<RootLoc>& out) {
  // invariant: exactly `count` roots of q lie in (lo, hi]
  if (count == 0) return;
  if (count == 1) {
    // shrink until rational hit or width below tol
    while (hi - lo > tol) {
      Rational mid = (lo + hi) / 2;
      if (q(mid) == 0) {
        out.push_back({true, mid, mid, mid});
        return;
      }
      if (sturm_count_half_open(seq, lo, mid) == 1)
        hi = mid;
      else
        lo = mid;
    }
    if (q(hi) == 0) {
      out.push_back({true, hi, hi, hi});
      return;
    }
    out.push_back({false, Rational(0), lo, hi});
    return;
  }
  Rational mid = (lo + hi) / 2;
  long left = sturm_count_half_open(seq, lo, mid);
  isolate_rec(seq, q, lo, mid, left, tol, out);
  isolate_rec(seq, q, mid, hi, count - left, tol, out);
}

}  // namespace

double RootLoc::approx() const {
  return exact ? value.get_d() : Rational((lo + hi) / 2).get_d();
}

namespace {

std::vector<Integer> small_divisors(Integer n, unsigned long cap = 2000000) {
  n = abs(n);
  std::vector<Integer> divs;
  for (Integer k = 1; k * k <= n; ++k) {
    if (mpz_cmp_ui(k.get_mpz_t(), cap) > 0) break;
    if (n % k == 0) {
      divs.push_back(k);
      divs.push_back(n / k);
    }
  }
  return divs;
}

// all rational roots of q, divided out of q (with multiplicity)
std::vector<Rational> extract_rational_roots(RatPoly& q) {
  std::vector<Rational> roots;
  // root at 0
  while (!q.is_zero() && q.coeff(0) == 0) {
    roots.push_back(0);
    q = q.divmod(RatPoly::monomial(1, 1)).first;
  }
  if (q.degree() < 1) return roots;
  // primitive integer form for the rational root theorem
  Integer l = 1;
  for (const Rational& c : q.coeffs()) mpz_lcm(l.get_mpz_t(), l.get_mpz_t(), c.get_den().get_mpz_t());
  std::vector<Integer> ic;
  Integer content = 0;
  for (const Rational& c : q.coeffs()) {
    Rational v = c * Rational(l);
    ic.push_back(v.get_num());
    mpz_gcd(content.get_mpz_t(), content.get_mpz_t(), ic.back().get_mpz_t());
  }
  for (auto& z : ic) z /= content;
  for (const Integer& p : small_divisors(ic.front()))
    for (const Integer& s : small_divisors(ic.back()))
      for (int sign : {1, -1}) {
        Rational r(sign * p, s);
        r.canonicalize();
        while (q.degree() >= 1 && q(r) == 0) {
          roots.push_back(r);
          q = q.divmod(RatPoly::monomial(1, 1) - RatPoly::constant(r)).first;
        }
      }
  return roots;
}

}  // namespace

std::vector<RootLoc> isolate_roots(const RatPoly& p, const Rational& a, const Rational& b,
                                   const Rational& tol) {
  if (p.is_zero()) throw ZeroPolynomial();
  std::vector<RootLoc> out;
  if (p.degree() == 0) return out;
  RatPoly q = p.squarefree_part();
  if (a > b) return out;
  // peel off rational roots first so bisection only ever brackets irrational ones
  std::vector<Rational> rr = extract_rational_roots(q);
  for (const Rational& r : rr)
    if (a <= r && r <= b) out.push_back({true, r, r, r});
  if (a < b && q.degree() >= 1) {
    SturmSequence seq = sturm_sequence(q);
    long n = sturm_count_half_open(seq, a, b);
    if (q(a) == 0) ++n;  // cannot happen (no rational roots left), kept for safety
    isolate_rec(seq, q, a, b, n, tol, out);
  }
  std::sort(out.begin(), out.end(), [](const RootLoc& x, const RootLoc& y) {
    Rational xm = x.exact ? x.value : (x.lo + x.hi) / 2;
    Rational ym = y.exact ? y.value : (y.lo + y.hi) / 2;
    return xm < ym;
  });
  return out;
}

LinearRelations linear_relations(const std::vector<RatPoly>& ps) {
  std::size_t cols = 0;
  for (const RatPoly& p : ps) cols = std::max(cols, p.coeffs().size());
  // rows = polynomials, columns = monomial degrees; relation vectors u with
  // sum u_i p_i = 0 form the nullspace of the transpose
  RatMatrix mt(cols, std::vector<Rational>(ps.size(), Rational(0)));
  for (std::size_t i = 0; i < ps.size(); ++i)
    for (std::size_t k = 0; k < ps[i].coeffs().size(); ++k) mt[k][i] = ps[i].coeffs()[k];
  NullspaceResult ns = nullspace(mt);
  LinearRelations out;
  out.rank = ns.rank;
  out.nullspace_basis = std::move(ns.basis);
  return out;
}

}  // namespace curvepat
