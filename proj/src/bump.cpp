#include "curvepat/bump.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>

namespace curvepat {

namespace {

const real kUlpSlack = real(1) + boost::multiprecision::pow(real(2), -40);

real log2r(const real& x) { return boost::multiprecision::log2(x); }

// g(x) = exp(-1/(x(1-x))) on (0,1), 0 outside
real g_val(const real& x) {
  if (x <= 0 || x >= 1) return 0;
  return boost::multiprecision::exp(-1 / (x * (1 - x)));
}

// log2 of envelope h(u) = u^{-2k} exp(-1/u)
real env_log2(const real& u, unsigned k) {
  static const real ln2 = boost::multiprecision::log(real(2));
  return -real(2 * k) * log2r(u) - 1 / (u * ln2);
}

// certified lower bound on Z = integral of exp(-1/(x(1-x))) over (0,1)
real bump_normalizer_lb(unsigned subintervals = 2048) {
  real sum = 0;
  const real w = real(1) / subintervals;
  for (unsigned i = 0; i < subintervals; ++i) {
    // g is unimodal with peak at 1/2, so the min on a subinterval not
    // containing 1/2 is at an endpoint; subintervals containing 1/2 are
    // bounded below by an endpoint value as well
    real lo = g_val(real(i) / subintervals), hi = g_val(real(i + 1) / subintervals);
    sum += w * std::min(lo, hi);
  }
  return sum / kUlpSlack;
}

}  // namespace

RatPoly bump_derivative_numerator(unsigned k) {
  static std::map<unsigned, RatPoly> cache;
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(k);
  if (it != cache.end()) return it->second;
  RatPoly u = parse_poly("t - t^2"), uprime = parse_poly("1 - 2t");
  RatPoly p = RatPoly::constant(1);  // P_0
  unsigned have = 0;
  if (!cache.empty()) {
    auto last = std::prev(cache.end());
    have = last->first;
    p = last->second;
  } else {
    cache[0] = p;
  }
  for (unsigned n = have; n < k; ++n) {
    p = uprime * p + u * u * p.derivative() - Rational(2L * n) * (u * uprime * p);
    cache[n + 1] = p;
  }
  return cache[k];
}

real bump_deriv_l1_log2(unsigned k, unsigned subintervals) {
  RatPoly pk = bump_derivative_numerator(k);
  // |g^{(k)}(x)| <= max|P_k on [x1,x2]| * max over u-range of u^{-2k} e^{-1/u}
  real bound = 0;
  const real w = real(1) / subintervals;
  for (unsigned i = 0; i < subintervals; ++i) {
    real x1 = real(i) / subintervals, x2 = real(i + 1) / subintervals;
    // coefficient bound for |P_k| on [x1,x2] subset [0,1]
    real maxP = 0, xp = 1;
    for (const Rational& c : pk.coeffs()) {
      real cc(c.get_str());
      maxP += boost::multiprecision::abs(cc) * xp;
      xp *= x2;
    }
    maxP *= kUlpSlack;
    // u = x(1-x) range over the subinterval
    real u1 = x1 * (1 - x1), u2 = x2 * (1 - x2);
    if (x1 < real(1) / 2 && real(1) / 2 < x2) u2 = real(1) / 4;
    real ulo = std::min(u1, u2), uhi = std::max(u1, u2);
    if (ulo == 0) ulo = std::min(uhi, w * w);  // env -> 0 as u -> 0, any positive stand-in
    real e = std::max(env_log2(ulo, k), env_log2(uhi, k));
    real ustar = real(1) / (2 * k);
    if (ulo < ustar && ustar < uhi) e = std::max(e, env_log2(ustar, k));
    bound += w * maxP * boost::multiprecision::pow(real(2), e);
  }
  bound *= kUlpSlack;
  real z = bump_normalizer_lb();
  return log2r(bound) - log2r(z);
}

BumpProfile make_bump_profile(int d) {
  if (d < 1) throw PreconditionError("bump profile needs d >= 1");
  BumpProfile p;
  p.d = d;
  // largest delta = 2^-j with (1 - 2 delta)^{-d} <= 2
  for (long j = 2;; ++j) {
    real delta = boost::multiprecision::pow(real(2), -j);
    real sup = boost::multiprecision::pow(1 - 2 * delta, -d) * kUlpSlack;
    if (sup <= 2) {
      p.delta_log2 = -j;
      p.sup_bound = sup;
      return p;
    }
  }
}

real bump_tail_log2(const BumpProfile& prof, long a_log2) {
  const real log2_2pi = log2r(2 * boost::multiprecision::atan(real(1)) * 4);
  const real log2_sqrt_d = log2r(real(prof.d)) / 2;
  // || phi1^{(k)} ||_1 <= delta^{-k} || beta^{(k)} ||_1, log2 form
  auto ik_log2 = [&](unsigned k) {
    return bump_deriv_l1_log2(k) - real(prof.delta_log2) * k;
  };
  // C1 >= integral |phi1_hat| over R:  C1 <= 2 sqrt(I_2) / pi
  real c1_log2 = 1 + ik_log2(2) / 2 - (log2_2pi - 1);
  if (c1_log2 < 0) c1_log2 = 0;  // C1 >= integral phi1 = 1 anyway; keep the max
  // xi_0 = A / sqrt(d); tail <= 2 d C1^{d-1} I_k xi0^{1-k} / ((2pi)^k (k-1))
  const real xi0_log2 = real(a_log2) - log2_sqrt_d;
  real best = 0;
  bool first = true;
  for (unsigned k = 4; k <= 64; k += 6) {
    real t = 1 + log2r(real(prof.d)) + real(prof.d - 1) * c1_log2 + ik_log2(k) +
             real(1 - static_cast<long>(k)) * xi0_log2 - real(k) * log2_2pi -
             log2r(real(k - 1));
    if (first || t < best) {
      best = t;
      first = false;
    }
  }
  return best;
}

double bump_value_1d(const BumpProfile& prof, double x) {
  // phi1 = (1-2 delta)^{-1} (1_[delta,1-delta] * beta_delta)(x), by quadrature
  const double delta = std::ldexp(1.0, static_cast<int>(prof.delta_log2));
  if (x <= 0 || x >= 1) return 0;
  static thread_local std::map<long, double> zcache;
  double z;
  auto it = zcache.find(0);
  if (it == zcache.end()) {
    z = 0;
    const int n = 4000;
    for (int i = 0; i < n; ++i) {
      double u = (i + 0.5) / n;
      z += std::exp(-1.0 / (u * (1 - u))) / n;
    }
    zcache[0] = z;
  } else {
    z = it->second;
  }
  // integrate beta_delta over [x-(1-delta), x-delta]
  double lo = std::max(0.0, (x - (1 - delta)) / delta), hi = std::min(1.0, (x - delta) / delta);
  if (hi <= lo) return 0;
  double acc = 0;
  const int n = 600;
  for (int i = 0; i < n; ++i) {
    double u = lo + (hi - lo) * (i + 0.5) / n;
    acc += std::exp(-1.0 / (u * (1 - u)));
  }
  acc *= (hi - lo) / n / z;
  return acc / (1 - 2 * delta);
}

double bump_value(const BumpProfile& prof, const std::vector<double>& x) {
  double v = 1;
  for (double xi : x) v *= bump_value_1d(prof, xi);
  return v;
}

}  // namespace curvepat
