#include "curvepat/constants.hpp"

#include <boost/math/special_functions/gamma.hpp>
#include <nlohmann/json.hpp>

namespace curvepat {

namespace bm = boost::multiprecision;

namespace {

const real kPi = bm::atan(real(1)) * 4;
const real kLn2 = bm::log(real(2));

real log2r(const real& x) { return bm::log2(x); }

long default_vdc(unsigned n) { return 5L * (1L << (n - 1)) - 2; }

}  // namespace

real riesz_constant(int d, const real& sigma) {
  if (!(sigma > 0 && sigma < d)) throw OutOfRange("riesz_constant needs 0 < sigma < d");
  using boost::math::tgamma;
  return bm::pow(kPi, sigma - real(d) / 2) * tgamma(real(d - sigma) / 2) / tgamma(sigma / 2);
}

real energy_constant(int d, const real& t) {
  if (!(t > 0)) throw NonpositiveT();
  return bm::pow(real(6), d) / (1 - bm::pow(real(2), -t));
}

real unit_ball_volume(int d) {
  using boost::math::tgamma;
  return bm::pow(kPi, real(d) / 2) / tgamma(real(d) / 2 + 1);
}

bool ConstantBundle::all_satisfied() const {
  for (const AuditEntry& e : audit)
    if (!e.satisfied) return false;
  return true;
}

ConstantBundle compute_bundle(int d, unsigned N, const std::string& profile,
                              const ConstantsConfig& cfg) {
  if (d < 2 || N < static_cast<unsigned>(d))
    throw PreconditionError("compute_bundle requires N >= d >= 2");
  ConstantBundle b;
  b.d = d;
  b.N = N;
  b.profile = profile;
  mpz_fac_ui(b.K_N.get_mpz_t(), N);
  b.K_N *= 2;
  b.sigma_N = Rational(d) - Rational(1, 2 * N);
  b.sigma_N.canonicalize();

  const real Kn(b.K_N.get_str());
  const real vol = unit_ball_volume(d);
  b.gamma_N = riesz_constant(d, real(d) - real(1) / (2 * N));
  b.E_value = energy_constant(d, real(1) / (4 * N));
  b.C = 4 * b.E_value;

  // M1 branch: L_N >= max{4dK_N/(b*c), 4dK_N/b} with b from psi >= 1/2 on
  // |x| <= b for the Gaussian psi(x) = e^{-pi |x|^2}, c = a0 b^d 2^{-d-1},
  // a0 = (1/2) 15^{-d} |B(0;1)|
  const real bconst = bm::sqrt(kLn2 / kPi);
  const real a0 = real(1) / 2 * bm::pow(real(15), -d) * vol;
  const real cconst = a0 * bm::pow(bconst, d) * bm::pow(real(2), -(d + 1));
  b.M1 = std::max(4 * d * Kn / (bconst * cconst), 4 * d * Kn / bconst);

  // M2 branch: 2 d a^{-d} max{c_2..c_N}, a from d K_N a <= 1/8
  const real a_vdc = real(1) / (8 * d * Kn);
  real cmax = 1;
  for (unsigned n = 2; n <= N; ++n) {
    long cn = (n - 2) < cfg.vdc_table.size() ? cfg.vdc_table[n - 2] : default_vdc(n);
    cmax = std::max(cmax, real(cn));
  }
  b.M2 = 2 * d * bm::pow(a_vdc, -d) * cmax;

  b.L_N = std::max({b.M1, b.M2, 2 * kPi * vol + 2 + 2 / b.gamma_N});

  b.bump = make_bump_profile(d);

  real tail_log2 = 0;
  if (profile == "rigorous") {
    // smallest power of two with A^d >= 4 L_N^2 and the bump-tail condition
    // tail(A) <= (1/2) A^{-4d}
    long e = static_cast<long>(bm::ceil(log2r(4 * b.L_N * b.L_N) / d).convert_to<double>());
    for (;; ++e) {
      if (e > 100000) throw ProfileInfeasible("A search exceeded budget");
      tail_log2 = bump_tail_log2(b.bump, e);
      if (tail_log2 <= -1 - real(4 * d) * e) break;
    }
    b.A_log2 = e;
    b.A = bm::pow(real(2), e);
    // B = 2^ceil(2N (log2 L + 4d log2 A + log2 C))
    b.log2_B = bm::ceil(2 * N * (log2r(b.L_N) + real(4 * d) * b.A_log2 + log2r(b.C)));
    // T from 4 pi sqrt(d) B |B(0;B)| 2^{-T} <= (1/2) A^{-4d}
    real t_need = log2r(4 * kPi * bm::sqrt(real(d))) + b.log2_B + log2r(vol) +
                  real(d) * b.log2_B + 1 + real(4 * d) * b.A_log2;
    b.T = static_cast<long long>(bm::ceil(t_need).convert_to<real>().convert_to<double>());
  } else if (profile == "demo") {
    b.A_log2 = cfg.demo_A_log2;
    b.A = bm::pow(real(2), b.A_log2);
    b.log2_B = cfg.demo_log2_B;
    b.T = cfg.demo_T;
    tail_log2 = bump_tail_log2(b.bump, b.A_log2);
  } else {
    throw PreconditionError("profile must be rigorous or demo");
  }

  // epsilon = min{ log2(1 + 2^{-dNT-2}) / (NT), 1/(4N^2) }
  const real y = real(d) * N * b.T + 2;
  real log2_first;  // log2 of log2(1+2^{-y})/(NT)
  if (y < 256) {
    real v = bm::log2(1 + bm::pow(real(2), -y)) / (real(N) * b.T);
    log2_first = log2r(v);
  } else {
    // log2(1+x) <= x/ln2, and >= x/ln2 * (1 - x/2); at x = 2^{-y} the
    // relative error is below 2^{-y-1}, far under working precision
    log2_first = -y - log2r(kLn2) - log2r(real(N) * b.T);
  }
  const real log2_cap = -log2r(real(4) * N * N);
  b.log2_epsilon = std::min(log2_first, log2_cap);

  // post-hoc audit of every inequality, margins in log2 scale
  auto push = [&](const std::string& name, const real& margin, const std::string& note = "") {
    b.audit.push_back({name, margin, margin >= 0, note});
  };
  push("A^d >= 4 L_N^2", real(d) * b.A_log2 - log2r(4 * b.L_N * b.L_N));
  push("bump tail <= (1/2) A^{-4d}", (-1 - real(4 * d) * b.A_log2) - tail_log2,
       "certified derivative-envelope bound; bump is the normalized plateau profile");
  push("B >= (L_N A^{4d} C)^{2N}",
       b.log2_B - 2 * N * (log2r(b.L_N) + real(4 * d) * b.A_log2 + log2r(b.C)));
  push("C >= 1", log2r(b.C));
  push("4 pi sqrt(d) B |B(0;B)| 2^{-T} <= (1/2) A^{-4d}",
       (-1 - real(4 * d) * b.A_log2) -
           (log2r(4 * kPi * bm::sqrt(real(d))) + b.log2_B + log2r(vol) + real(d) * b.log2_B - b.T));
  push("epsilon <= 1/(4N^2)", log2_cap - b.log2_epsilon);
  push("epsilon <= (d-1)/N", log2r(real(d - 1) / N) - b.log2_epsilon);
  push("gamma(d, sigma_N) external formula", 0,
       "standard Riesz-kernel Fourier constant (Mattila), not stated in source material");
  return b;
}

std::string bundle_to_json(const ConstantBundle& b) {
  nlohmann::json j;
  j["d"] = b.d;
  j["N"] = b.N;
  j["profile"] = b.profile;
  j["K_N"] = b.K_N.get_str();
  j["sigma_N"] = b.sigma_N.get_str();
  j["gamma_N"] = b.gamma_N.str(32);
  j["E_value"] = b.E_value.str(32);
  j["C"] = b.C.str(32);
  j["L_N"] = b.L_N.str(32);
  j["M1"] = b.M1.str(32);
  j["M2"] = b.M2.str(32);
  j["A_log2"] = b.A_log2;
  j["log2_B"] = b.log2_B.str(32);
  j["T"] = b.T;
  j["log2_epsilon"] = b.log2_epsilon.str(32);
  j["bump_delta_log2"] = b.bump.delta_log2;
  j["bump_sup_bound"] = b.bump.sup_bound.str(32);
  nlohmann::json audit = nlohmann::json::array();
  for (const AuditEntry& e : b.audit) {
    nlohmann::json a;
    a["constraint"] = e.name;
    a["margin_log2"] = e.margin_log2.str(16);
    a["satisfied"] = e.satisfied;
    if (!e.note.empty()) a["note"] = e.note;
    audit.push_back(a);
  }
  j["audit"] = audit;
  return j.dump(2);
}

}  // namespace curvepat
