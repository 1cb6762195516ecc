#pragma once

#include <complex>
#include <functional>
#include <string>
#include <vector>

#include "curvepat/constants.hpp"
#include "curvepat/curve.hpp"
#include "curvepat/errors.hpp"
#include "curvepat/rational.hpp"

namespace curvepat {

// Finite atomic approximation of a measure on R^d.  When cell_sides is
// nonempty each atom stands for its weight spread uniformly over an axis
// box of those side lengths centered at the point; this matters for
// self-interaction terms (Riesz energy diagonal, mollification below the
// atom spacing).  Atoms of a single measure share one cell shape.
struct DiscreteMeasure {
  int d = 0;
  std::vector<std::vector<double>> points;
  std::vector<double> weights;
  std::string label = "custom";  // curve | frostman | lebesgue-grid | custom
  std::vector<double> cell_sides;

  double total_mass() const;
};

struct CurveMeasureParams {
  CurveStd curve;
  long j = 0;
  Rational c = Rational(1, 100);
  int n_quad = 256;
  std::string rule = "gauss-legendre";
};

struct ScaleTooSmall : DomainError {
  using DomainError::DomainError;
};
struct NotProbability : DomainError {
  using DomainError::DomainError;
};
struct NoWitness : DomainError {
  using DomainError::DomainError;
};

// Smallest J with d * a^{-d} * ||Phi||_{C^N} * 2^{-J} <= 1/8, a = 1/(8*d*K_N).
long min_scale_J(const CurveStd& curve);

// Quadrature discretization of the arclength-free curve measure
// f -> int_c^1 f(Phi^j(s)) ds, supported on Phi^j([c,1]).
DiscreteMeasure curve_measure(const CurveMeasureParams& p);

// sum_k w_k e^{-2 pi i x_k . xi}
std::complex<double> fourier(const DiscreteMeasure& m, const std::vector<double>& xi);

// Oscillatory integral int_c^1 e(-xi . Phi^j(s)) ds with panel count scaled
// to |xi| so oscillations stay resolved on large grids.
std::complex<double> pi_hat(const CurveStd& curve, long j, const Rational& c,
                            const std::vector<double>& xi);

struct DecaySample {
  long j;
  double c;
  std::vector<double> xi;
  double modulus;
  double ratio;  // |pi_hat| * (1 + |xi|)^{1/N}
};

struct DecayReport {
  double L_N;
  double max_ratio;
  DecaySample arg_max;
  std::size_t samples = 0;
  bool all_within_bound = true;
};

DecayReport verify_decay(const CurveStd& curve, const ConstantBundle& bundle,
                         const std::vector<long>& j_list, const std::vector<Rational>& c_list,
                         const std::vector<std::vector<double>>& xi_grid);

double ball_mass(const DiscreteMeasure& m, const std::vector<double>& center, double r);

// x -> delta^{-d} sum w_k psi((x - x_k)/delta), psi(x) = e^{-pi |x|^2}
std::function<double(const std::vector<double>&)> mollify(const DiscreteMeasure& m, double delta);

struct ConfigIntegralResult {
  std::vector<double> deltas;
  std::vector<double> values;
  double liminf_proxy;  // running minimum over the supplied scales
};

// Values of int (mu * psi_delta) * pi dmu along delta_seq.  mu must be a
// probability measure.  Atoms carrying cells are integrated against the
// mollifier in closed form so the sequence stays meaningful below the grid
// spacing; pure atoms use the direct triple sum.
ConfigIntegralResult configuration_integral(const DiscreteMeasure& mu, const DiscreteMeasure& pi,
                                            std::vector<double> delta_seq);

std::vector<double> default_delta_seq();

struct PatternWitness {
  std::vector<double> x, y, gamma;
  double residual;  // |x - y - gamma|
};

// High-contribution triple with |x - y - gamma| <= sqrt(delta).
PatternWitness pattern_witness(const DiscreteMeasure& mu, const DiscreteMeasure& pi, double delta);

DiscreteMeasure uniform_grid_measure(int d, int per_side);  // cells on [0,1]^d, mass 1

void save_measure_csv(const DiscreteMeasure& m, std::ostream& os);
DiscreteMeasure load_measure_csv(std::istream& is);

}  // namespace curvepat
