#pragma once

#include <string>
#include <vector>

#include "curvepat/bump.hpp"
#include "curvepat/rational.hpp"

namespace curvepat {

struct OutOfRange : DomainError {
  using DomainError::DomainError;
};
struct NonpositiveT : DomainError {
  NonpositiveT() : DomainError("energy constant requires t > 0") {}
};
struct ProfileInfeasible : DomainError {
  using DomainError::DomainError;
};

// gamma(d, sigma) = pi^{sigma - d/2} Gamma((d-sigma)/2) / Gamma(sigma/2)
real riesz_constant(int d, const real& sigma);

// E(t) = 6^d / (1 - 2^{-t})
real energy_constant(int d, const real& t);

// volume of the unit ball in R^d
real unit_ball_volume(int d);

struct ConstantsConfig {
  // van der Corput constants c_n for n = 2, 3, ...; when shorter than needed,
  // extended by the default c_n = 5*2^{n-1} - 2
  std::vector<long> vdc_table;
  // demo-profile user constants
  long demo_A_log2 = 2;
  real demo_log2_B = 6;
  long long demo_T = 8;
};

struct AuditEntry {
  std::string name;
  real margin_log2;  // nonnegative iff the inequality holds
  bool satisfied = false;
  std::string note;
};

struct ConstantBundle {
  int d = 0;
  unsigned N = 0;
  Integer K_N;            // 2 * N!
  Rational sigma_N;       // d - 1/(2N)
  real gamma_N;
  real E_value;           // E(1/(4N))
  real C;                 // 4 * E(1/(4N))
  real L_N;
  real M1, M2;            // the two traced lower-bound branches of L_N
  long A_log2 = 0;        // A = 2^{A_log2}
  real A;
  real log2_B;
  long long T = 0;
  real log2_epsilon;
  std::string profile;    // "rigorous" | "demo"
  BumpProfile bump;
  std::vector<AuditEntry> audit;

  bool all_satisfied() const;
};

ConstantBundle compute_bundle(int d, unsigned N, const std::string& profile,
                              const ConstantsConfig& cfg = {});

std::string bundle_to_json(const ConstantBundle& b);

}  // namespace curvepat
