#pragma once

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <vector>

#include "curvepat/polynomial.hpp"

namespace curvepat {

using real = boost::multiprecision::cpp_bin_float_50;

// Smooth normalized plateau bump on [0,1]^d:
//   phi(x) = prod_i phi1(x_i),   phi1 = (1-2*delta)^{-1} * 1_[delta,1-delta] * beta_delta,
// with beta the normalized C-infinity bump exp(-1/(x(1-x))) on (0,1) and
// beta_delta(x) = beta(x/delta)/delta.  Then phi is C-infinity, supported in
// [0,1]^d, integrates to exactly 1, and sup phi = (1-2*delta)^{-d} <= 2 for
// the delta chosen here.
struct BumpProfile {
  int d = 2;
  long delta_log2 = -3;  // delta = 2^{delta_log2}
  real sup_bound;        // (1-2*delta)^{-d}
};

BumpProfile make_bump_profile(int d);

// numerator polynomial P_k of beta's k-th derivative:
//   g = exp(-1/u), u = x(1-x),  g^{(k)} = g * P_k / u^{2k}
// exact recursion P_{k+1} = u' P_k + u^2 P_k' - 2k u u' P_k over the rationals
RatPoly bump_derivative_numerator(unsigned k);

// certified upper bound on log2 || beta^{(k)} ||_{L1(0,1)} (normalized beta),
// by per-subinterval coefficient/envelope bounds on M uniform subintervals
real bump_deriv_l1_log2(unsigned k, unsigned subintervals = 1024);

// certified upper bound on log2 of the Fourier tail
//   integral_{|xi| >= 2^{a_log2}} |phi_hat(xi)| d xi
// minimized over derivative orders k
real bump_tail_log2(const BumpProfile& prof, long a_log2);

// pointwise evaluation (quadrature-accurate, not certified)
double bump_value_1d(const BumpProfile& prof, double x);
double bump_value(const BumpProfile& prof, const std::vector<double>& x);

}  // namespace curvepat
