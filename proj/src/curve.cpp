#include "curvepat/curve.hpp"

#include <algorithm>
#include <cassert>
#include <map>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

namespace curvepat {

namespace {

Rational parse_rat_token(const std::string& s) {
  std::string t;
  for (char c : s)
    if (!std::isspace(static_cast<unsigned char>(c))) t += c;
  if (t.empty()) throw SyntaxError("empty rational", 0);
  Rational q(t);
  q.canonicalize();
  return q;
}

CurveSpec from_fields(int d, const std::string& lo, const std::string& hi,
                      const std::vector<std::string>& phis) {
  if (d < 2) throw DomainError("dimension must be >= 2");
  if (static_cast<int>(phis.size()) != d) throw DomainError("component count != d");
  CurveSpec c;
  c.lo = parse_rat_token(lo);
  c.hi = parse_rat_token(hi);
  if (!(c.lo < c.hi)) throw DomainError("interval must be nondegenerate");
  for (const std::string& p : phis) c.components.push_back(parse_poly(p));
  return c;
}

}  // namespace

CurveSpec load_curve_spec(const std::string& text) {
  std::size_t first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    auto j = nlohmann::json::parse(text);
    int d = j.at("d").get<int>();
    std::vector<std::string> phis;
    for (int i = 1; i <= d; ++i) phis.push_back(j.at("phi" + std::to_string(i)).get<std::string>());
    auto rat_of = [](const nlohmann::json& v) {
      return v.is_string() ? v.get<std::string>() : nlohmann::to_string(v);
    };
    return from_fields(d, rat_of(j.at("I").at(0)), rat_of(j.at("I").at(1)), phis);
  }
  // key=value fields separated by ';'
  int d = -1;
  std::string lo, hi;
  std::map<int, std::string> phis;
  std::stringstream ss(text);
  std::string field;
  while (std::getline(ss, field, ';')) {
    std::size_t eq = field.find('=');
    if (eq == std::string::npos) {
      if (field.find_first_not_of(" \t\r\n") == std::string::npos) continue;
      throw SyntaxError("expected key=value field", 0);
    }
    std::string key = field.substr(0, eq), val = field.substr(eq + 1);
    key.erase(std::remove_if(key.begin(), key.end(),
                             [](unsigned char c) { return std::isspace(c); }),
              key.end());
    if (key == "d") {
      d = std::stoi(val);
    } else if (key == "I") {
      std::size_t l = val.find('['), m = val.find(','), r = val.find(']');
      if (l == std::string::npos || m == std::string::npos || r == std::string::npos)
        throw SyntaxError("malformed interval, expected I=[a,b]", 0);
      lo = val.substr(l + 1, m - l - 1);
      hi = val.substr(m + 1, r - m - 1);
    } else if (key.rfind("phi", 0) == 0) {
      phis[std::stoi(key.substr(3))] = val;
    } else {
      throw SyntaxError("unknown field '" + key + "'", 0);
    }
  }
  std::vector<std::string> ordered;
  for (int i = 1; i <= d; ++i) {
    auto it = phis.find(i);
    if (it == phis.end()) throw SyntaxError("missing phi" + std::to_string(i), 0);
    ordered.push_back(it->second);
  }
  return from_fields(d, lo, hi, ordered);
}

std::string render_curve_spec(const CurveSpec& c) {
  std::ostringstream os;
  os << "d=" << c.dim() << "; I=[" << c.lo.get_str() << "," << c.hi.get_str() << "]";
  for (int i = 0; i < c.dim(); ++i) os << "; phi" << (i + 1) << "=" << c.components[i].render();
  return os.str();
}

std::string curve_spec_to_json(const CurveSpec& c) {
  nlohmann::json j;
  j["d"] = c.dim();
  j["I"] = {c.lo.get_str(), c.hi.get_str()};
  for (int i = 0; i < c.dim(); ++i) j["phi" + std::to_string(i + 1)] = c.components[i].render();
  return j.dump();
}

Integer CurveStd::K_N() const {
  Integer f;
  mpz_fac_ui(f.get_mpz_t(), type_N);
  return 2 * f;
}

std::string curve_std_to_json(const CurveStd& s) {
  nlohmann::json j;
  j["pattern"] = s.pattern;
  j["type_N"] = s.type_N;
  j["safe_scale_J0"] = s.safe_scale_J0;
  j["base_point"] = s.base_point.get_str();
  j["domain_scale"] = s.domain_scale.get_str();
  j["K_N"] = s.K_N().get_str();
  std::vector<std::string> comps;
  for (const RatPoly& p : s.components) comps.push_back(p.render());
  j["components"] = comps;
  std::vector<std::string> l;
  for (const auto& row : s.transform_L)
    for (const Rational& q : row) l.push_back(q.get_str());
  j["transform_L"] = l;  // row-major
  return j.dump();
}

std::vector<RootLoc> find_common_zeros(const CurveSpec& c) {
  RatPoly g = poly_gcd(c.components);  // throws AllZero when Phi == 0
  return isolate_roots(g, c.lo, c.hi);
}

VanishingPattern vanishing_pattern(const CurveSpec& c, const Rational& t0) {
  VanishingPattern vp;
  vp.base_point = t0;
  for (const RatPoly& p : c.components) {
    if (p.is_zero()) throw ZeroComponent();
    auto ord = p.taylor_shift(t0).vanishing_order();
    if (!ord || *ord == 0)
      throw PreconditionError("vanishing_pattern: Phi(t0) != 0");
    vp.orders.push_back(static_cast<unsigned>(*ord));
  }
  return vp;
}

std::optional<unsigned> type_at(const CurveSpec& c, const Rational& t0) {
  const int d = c.dim();
  long maxdeg = 0;
  for (const RatPoly& p : c.components) maxdeg = std::max(maxdeg, p.degree());
  std::vector<RatPoly> shifted;
  for (const RatPoly& p : c.components) shifted.push_back(p.taylor_shift(t0));
  RatMatrix rows;
  Rational fact = 1;
  for (long n = 1; n <= maxdeg; ++n) {
    fact *= n;
    std::vector<Rational> row(d);
    for (int i = 0; i < d; ++i) row[i] = shifted[i].coeff(static_cast<std::size_t>(n)) * fact;
    rows.push_back(std::move(row));
    if (rat_rank(rows) == d) return static_cast<unsigned>(n);
  }
  return std::nullopt;
}

namespace {

// Arithmetic in Q[t]/(g) with zero test certified by Sturm counting on the
// root's isolating interval: h(alpha) == 0 iff gcd(h mod g, g) has a root there.
struct AlgCtx {
  RatPoly g;
  Rational lo, hi;

  RatPoly reduce(const RatPoly& p) const { return p.divmod(g).second; }

  bool is_zero(const RatPoly& h) const {
    RatPoly r = reduce(h);
    if (r.is_zero()) return true;
    RatPoly common = poly_gcd({r, g});
    if (common.degree() == 0) return false;
    return sturm_root_count(common, lo, hi) > 0;
  }
};

// rank of a matrix with entries in Q[t]/(g), fraction-free elimination
long alg_rank(std::vector<std::vector<RatPoly>> m, const AlgCtx& ctx) {
  if (m.empty()) return 0;
  const std::size_t rows = m.size(), cols = m[0].size();
  long rank = 0;
  std::size_t r = 0;
  for (std::size_t c = 0; c < cols && r < rows; ++c) {
    std::size_t piv = r;
    while (piv < rows && ctx.is_zero(m[piv][c])) ++piv;
    if (piv == rows) continue;
    std::swap(m[r], m[piv]);
    for (std::size_t i = r + 1; i < rows; ++i) {
      if (ctx.is_zero(m[i][c])) {
        m[i][c] = RatPoly();
        continue;
      }
      for (std::size_t j = c + 1; j < cols; ++j)
        m[i][j] = ctx.reduce(m[r][c] * m[i][j] - m[i][c] * m[r][j]);
      m[i][c] = RatPoly();
    }
    ++rank;
    ++r;
  }
  return rank;
}

}  // namespace

std::optional<unsigned> type_at(const CurveSpec& c, const RatPoly& defining, const RootLoc& root) {
  if (root.exact) return type_at(c, root.value);
  const int d = c.dim();
  AlgCtx ctx{defining.squarefree_part(), root.lo, root.hi};
  long maxdeg = 0;
  for (const RatPoly& p : c.components) maxdeg = std::max(maxdeg, p.degree());
  std::vector<std::vector<RatPoly>> rows;
  for (long n = 1; n <= maxdeg; ++n) {
    std::vector<RatPoly> row(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i)
      row[static_cast<std::size_t>(i)] =
          ctx.reduce(c.components[static_cast<std::size_t>(i)].derivative(static_cast<unsigned>(n)));
    rows.push_back(std::move(row));
    if (alg_rank(rows, ctx) == d) return static_cast<unsigned>(n);
  }
  return std::nullopt;
}

namespace {

unsigned order_or_throw(const RatPoly& p, unsigned type_N) {
  auto ord = p.vanishing_order();
  if (!ord || *ord > type_N)
    throw NotFiniteType("coincidence elimination exceeded the type bound");
  return static_cast<unsigned>(*ord);
}

// row_target += factor * row_source, applied to a d x d matrix
void row_op(RatMatrix& L, std::size_t target, std::size_t source, const Rational& factor) {
  for (std::size_t j = 0; j < L[target].size(); ++j) L[target][j] += factor * L[source][j];
}

}  // namespace

CurveStd standardize(const CurveSpec& c, const Rational& t0, unsigned N) {
  const std::size_t d = static_cast<std::size_t>(c.dim());
  if (t0 < c.lo || t0 > c.hi) throw PreconditionError("standardize: t0 outside the interval");

  CurveStd out;
  out.type_N = N;
  out.base_point = t0;

  // recenter to 0 and reparametrize the domain to [0, 1]
  Rational a = c.lo - t0, b = c.hi - t0;
  out.domain_scale = (a < 0) ? a : b;
  std::vector<RatPoly> comp;
  for (const RatPoly& p : c.components)
    comp.push_back(p.taylor_shift(t0).scale_arg(out.domain_scale));

  RatMatrix& L = out.transform_L;
  L.assign(d, std::vector<Rational>(d, Rational(0)));
  for (std::size_t i = 0; i < d; ++i) L[i][i] = 1;

  std::vector<unsigned> m(d);
  for (std::size_t i = 0; i < d; ++i) m[i] = order_or_throw(comp[i], N);

  // step 1: inject N into the pattern when absent, via u with
  // u . Phi^{(n)}(0) = 0 for n < N and u . Phi^{(N)}(0) != 0
  if (std::find(m.begin(), m.end(), N) == m.end()) {
    RatMatrix rows;
    Rational fact = 1;
    for (unsigned n = 1; n < N; ++n) {
      fact *= n;
      std::vector<Rational> row(d);
      for (std::size_t i = 0; i < d; ++i) row[i] = comp[i].coeff(n) * fact;
      rows.push_back(std::move(row));
    }
    fact *= N;
    std::vector<Rational> rowN(d);
    for (std::size_t i = 0; i < d; ++i) rowN[i] = comp[i].coeff(N) * fact;

    auto ns = rows.empty() ? NullspaceResult{} : nullspace(rows);
    std::vector<std::vector<Rational>> candidates;
    if (rows.empty())
      for (std::size_t i = 0; i < d; ++i) {
        std::vector<Rational> e(d, Rational(0));
        e[i] = 1;
        candidates.push_back(std::move(e));
      }
    else
      candidates = ns.basis;
    const std::vector<Rational>* u = nullptr;
    for (const auto& v : candidates) {
      Rational dot = 0;
      for (std::size_t i = 0; i < d; ++i) dot += v[i] * rowN[i];
      if (dot == 0) continue;
      if (!u) u = &v;
      if (v[d - 1] != 0) {  // prefer u_d != 0 (proof's "assume u_d != 0")
        u = &v;
        break;
      }
    }
    if (!u) throw NotFiniteType("no injection vector: type exceeds N");
    std::vector<Rational> uv = *u;
    if (uv[d - 1] == 0) {
      std::size_t p = d - 1;
      while (uv[p] == 0) --p;
      std::swap(uv[p], uv[d - 1]);
      std::swap(comp[p], comp[d - 1]);
      std::swap(m[p], m[d - 1]);
      std::swap(L[p], L[d - 1]);
    }
    RatPoly inj;
    for (std::size_t i = 0; i < d; ++i) inj = inj + comp[i] * uv[i];
    comp[d - 1] = inj;
    std::vector<Rational> newrow(d, Rational(0));
    for (std::size_t j = 0; j < d; ++j)
      for (std::size_t i = 0; i < d; ++i) newrow[j] += uv[i] * L[i][j];
    L[d - 1] = std::move(newrow);
    m[d - 1] = order_or_throw(comp[d - 1], N);
    assert(m[d - 1] == N);
  }

  // step 2: coincidence elimination, lexicographically first duplicate pair;
  // each subtraction strictly increases the later entry, sum <= d*N bounds the loop
  while (true) {
    std::size_t i0 = d, i1 = d;
    for (std::size_t i = 0; i < d && i0 == d; ++i)
      for (std::size_t j = i + 1; j < d; ++j)
        if (m[i] == m[j]) {
          i0 = i;
          i1 = j;
          break;
        }
    if (i0 == d) break;
    Rational factor = -comp[i1].coeff(m[i1]) / comp[i0].coeff(m[i0]);
    comp[i1] = comp[i1] + comp[i0] * factor;
    row_op(L, i1, i0, factor);
    m[i1] = order_or_throw(comp[i1], N);
  }

  // step 3: permute to strictly increasing pattern
  std::vector<std::size_t> idx(d);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t x, std::size_t y) { return m[x] < m[y]; });
  std::vector<RatPoly> comp2(d);
  RatMatrix L2(d);
  std::vector<unsigned> m2(d);
  for (std::size_t i = 0; i < d; ++i) {
    comp2[i] = comp[idx[i]];
    L2[i] = L[idx[i]];
    m2[i] = m[idx[i]];
  }
  comp = std::move(comp2);
  L = std::move(L2);
  m = std::move(m2);

  // step 4: diagonal scaling to phi_i(0) = 1
  for (std::size_t i = 0; i < d; ++i) {
    Rational lead = comp[i].coeff(m[i]);
    Rational s = 1 / lead;
    comp[i] = comp[i] * s;
    for (Rational& q : L[i]) q *= s;
  }

  if (m.back() != N)
    throw NotFiniteType("pattern does not reach the declared type");
  out.components = std::move(comp);
  out.pattern = std::move(m);

  // step 5: smallest J0 certifying c1/c2 on [0, 2^-J0] by exact coefficient bounds
  const Rational twoNfact{out.K_N()};  // K_N = 2 * N!
  for (long J = 0;; ++J) {
    if (J > 4096) throw DomainError("J0 search failed to terminate");
    Rational h = pow2q(-J);
    bool ok = true;
    for (std::size_t i = 0; i < d && ok; ++i) {
      unsigned ni = out.pattern[i];
      for (unsigned ell = 0; ell <= ni && ok; ++ell) {
        RatPoly dp = out.components[i].derivative(ell);
        // dp(t) = t^{ni-ell} * (sum a_m t^m); bound sum |a_m| h^m
        Rational sum_abs = 0, lead = 0;
        unsigned base = ni - ell;
        for (std::size_t k = base; k < dp.coeffs().size(); ++k) {
          Rational term = rat_abs(dp.coeff(k)) * rat_pow(h, k - base);
          if (k == base)
            lead = rat_abs(dp.coeff(k));
          else
            sum_abs += term;
        }
        if (ell < ni) {
          if (lead + sum_abs > twoNfact) ok = false;
        } else {
          // c2: 1/2 <= |Phi^{(ni)}| <= 2 N!
          if (lead + sum_abs > twoNfact) ok = false;
          if (lead - sum_abs < Rational(1, 2)) ok = false;
        }
      }
    }
    if (ok) {
      out.safe_scale_J0 = J;
      break;
    }
  }
  return out;
}

std::vector<RatPoly> rescale(const CurveStd& s, long j) {
  if (j < 0) throw PreconditionError("rescale: j must be >= 0");
  std::vector<RatPoly> out;
  for (std::size_t i = 0; i < s.components.size(); ++i) {
    const long ni = static_cast<long>(s.pattern[i]);
    std::vector<Rational> c = s.components[i].coeffs();
    for (std::size_t k = 0; k < c.size(); ++k)
      c[k] *= pow2q((ni - static_cast<long>(k)) * j);
    out.emplace_back(std::move(c));
  }
  return out;
}

}  // namespace curvepat
