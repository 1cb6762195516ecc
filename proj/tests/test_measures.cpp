#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <random>
#include <sstream>

#include "curvepat/constants.hpp"
#include "curvepat/curve.hpp"
#include "curvepat/measures.hpp"
#include "curvepat/polynomial.hpp"

using namespace curvepat;

namespace {

CurveStd make_monomial_curve(const std::vector<std::string>& comps, unsigned N) {
  CurveSpec spec;
  for (const auto& c : comps) spec.components.push_back(parse_poly(c));
  spec.lo = 0;
  spec.hi = 1;
  return standardize(spec, 0, N);
}

CurveStd parabola_curve() { return make_monomial_curve({"t", "t^2"}, 2); }

double norm2(const std::vector<double>& v) {
  double r = 0;
  for (double x : v) r += x * x;
  return std::sqrt(r);
}

// least-squares slope of log2|pi_hat(R u)| against log2 R
double decay_slope(const CurveStd& curve, const std::vector<double>& u, int k_lo, int k_hi) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (int k = k_lo; k <= k_hi; ++k) {
    double R = std::pow(2.0, k);
    std::vector<double> xi(u.size());
    for (size_t i = 0; i < u.size(); ++i) xi[i] = R * u[i];
    double mod = std::abs(pi_hat(curve, curve.safe_scale_J0, Rational(1, 100), xi));
    double x = k, y = std::log2(mod);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

TEST_CASE("curve measure: mass, support, scale guard") {
  CurveStd curve = parabola_curve();
  CurveMeasureParams p;
  p.curve = curve;
  p.j = curve.safe_scale_J0;
  p.c = Rational(1, 100);
  p.n_quad = 1024;
  DiscreteMeasure m = curve_measure(p);

  CHECK(m.d == 2);
  CHECK(m.label == "curve");
  CHECK(std::abs(m.total_mass() - 0.99) <= 1e-12);
  for (double w : m.weights) CHECK(w > 0);
  // support on the curve graph: second coordinate is the square of the first
  for (const auto& pt : m.points) CHECK(std::abs(pt[1] - pt[0] * pt[0]) <= 1e-12);

  p.j = curve.safe_scale_J0 - 1;
  CHECK_THROWS_AS(curve_measure(p), ScaleTooSmall);
  p.j = curve.safe_scale_J0;
  p.c = Rational(0);
  CHECK_THROWS_AS(curve_measure(p), DomainError);
}

TEST_CASE("ball mass against the root-finding oracle") {
  // |Phi(s)|^2 = s^2 + s^4 = 1/4 at s* = sqrt((sqrt(2)-1)/2); the monomial
  // parabola is invariant under rescaling, so the oracle holds at any j
  CurveStd curve = parabola_curve();
  CurveMeasureParams p;
  p.curve = curve;
  p.j = curve.safe_scale_J0;
  p.c = Rational(1, 100);
  p.n_quad = 4096;
  DiscreteMeasure m = curve_measure(p);

  double s_star = std::sqrt((std::sqrt(2.0) - 1.0) / 2.0);
  double mass = ball_mass(m, {0.0, 0.0}, 0.5);
  CHECK(std::abs(mass - (s_star - 0.01)) <= 6e-3);
  CHECK_THROWS_AS(ball_mass(m, {0.0, 0.0}, 0.0), DomainError);
}

TEST_CASE("ball mass lower bound r/L_N across scales and radii") {
  struct Pick {
    CurveStd curve;
    long L;  // 2 d K_N
  };
  std::vector<Pick> picks;
  picks.push_back({parabola_curve(), 16});
  picks.push_back({make_monomial_curve({"t^2", "t^3"}, 3), 48});

  for (const auto& pk : picks) {
    for (long j : {pk.curve.safe_scale_J0, pk.curve.safe_scale_J0 + 3}) {
      for (int k = 0; k <= 5; ++k) {
        Rational r(1, 1L << k);
        CurveMeasureParams p;
        p.curve = pk.curve;
        p.j = j;
        p.c = r / (2 * pk.L);
        p.n_quad = 2048;
        DiscreteMeasure m = curve_measure(p);
        double mass = ball_mass(m, {0.0, 0.0}, r.get_d());
        CHECK(mass >= r.get_d() / pk.L);
      }
    }
  }
}

TEST_CASE("fourier transform basics") {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> unif(-1, 1);
  DiscreteMeasure m;
  m.d = 2;
  for (int k = 0; k < 20; ++k) {
    m.points.push_back({unif(rng), unif(rng)});
    m.weights.push_back(0.05);
  }
  CHECK(std::abs(fourier(m, {0.0, 0.0}) - std::complex<double>(1.0, 0.0)) <= 1e-14);
  for (auto xi : {std::vector<double>{3, -2}, {0.5, 7}, {-4, -4}}) {
    std::vector<double> neg{-xi[0], -xi[1]};
    CHECK(std::abs(fourier(m, neg) - std::conj(fourier(m, xi))) <= 1e-14);
  }
}

TEST_CASE("oscillatory quadrature: pi_hat agrees with dense atomic sums") {
  CurveStd curve = parabola_curve();
  Rational c(1, 100);
  std::vector<double> xi{30, -17};

  CurveMeasureParams p;
  p.curve = curve;
  p.j = curve.safe_scale_J0;
  p.c = c;
  p.n_quad = 32768;
  std::complex<double> dense = fourier(curve_measure(p), xi);
  std::complex<double> fast = pi_hat(curve, p.j, c, xi);
  CHECK(std::abs(dense - fast) <= 1e-8);

  // zero frequency gives the mass
  CHECK(std::abs(pi_hat(curve, p.j, c, {0.0, 0.0}) - std::complex<double>(0.99, 0.0)) <= 1e-12);

  // quadrature refinement is already converged at moderate node counts
  p.n_quad = 512;
  std::complex<double> a = fourier(curve_measure(p), xi);
  p.n_quad = 2048;
  std::complex<double> b = fourier(curve_measure(p), xi);
  CHECK(std::abs(a - b) <= 1e-9);
}

TEST_CASE("decay report for the parabola") {
  CurveStd curve = parabola_curve();
  ConstantBundle bundle = compute_bundle(2, 2, "demo", ConstantsConfig{});
  long J = std::max(min_scale_J(curve), curve.safe_scale_J0);

  std::vector<std::vector<double>> dirs = {
      {1, 0}, {0, 1}, {M_SQRT1_2, M_SQRT1_2}, {M_SQRT1_2, -M_SQRT1_2},
      {2 / std::sqrt(5.0), 1 / std::sqrt(5.0)}, {1 / std::sqrt(5.0), 2 / std::sqrt(5.0)},
      {-1 / std::sqrt(5.0), 2 / std::sqrt(5.0)}, {3 / std::sqrt(10.0), 1 / std::sqrt(10.0)}};
  std::vector<std::vector<double>> grid;
  for (int k = 0; k <= 10; ++k)
    for (const auto& u : dirs) grid.push_back({u[0] * (1 << k), u[1] * (1 << k)});

  DecayReport rep = verify_decay(curve, bundle, {J}, {Rational(1, 100)}, grid);
  CHECK(rep.samples == grid.size());
  CHECK(rep.max_ratio > 0);
  // stationary phase keeps |pi_hat| (1+|xi|)^{1/2} uniformly small
  CHECK(rep.max_ratio <= 4.0);
  CHECK(rep.all_within_bound);
  CHECK(std::abs(norm2(rep.arg_max.xi) * 0 + rep.arg_max.ratio - rep.max_ratio) <= 1e-15);

  CHECK_THROWS_AS(verify_decay(curve, bundle, {J - 1}, {Rational(1, 100)}, grid),
                  PreconditionError);
}

TEST_CASE("decay exponent of (t, t^3) along the degenerate direction") {
  CurveStd curve = make_monomial_curve({"t", "t^3"}, 3);
  double slope = decay_slope(curve, {0.0, 1.0}, 5, 13);
  // van der Corput for the cubic phase: |pi_hat(0, R)| ~ R^{-1/3}
  CHECK(-slope >= 1.0 / 3.0 - 0.05);
  CHECK(-slope <= 1.0 / 3.0 + 0.1);
}

TEST_CASE("mollification: mass conservation and self-dual kernel") {
  DiscreteMeasure m = uniform_grid_measure(2, 3);
  double delta = 0.25;
  auto f = mollify(m, delta);

  // Riemann sum over a box that captures all Gaussian tails
  double h = 0.005, total = 0;
  for (double x = -1.0; x < 2.0; x += h)
    for (double y = -1.0; y < 2.0; y += h) total += f({x + h / 2, y + h / 2}) * h * h;
  CHECK(std::abs(total - 1.0) <= 1e-6);

  // psi(x) = e^{-pi x^2} equals its own Fourier transform on a test grid
  for (double xi : {0.0, 0.5, 1.3}) {
    double ft = 0;
    for (double t = -6.0; t < 6.0; t += 0.001)
      ft += std::exp(-M_PI * t * t) * std::cos(2 * M_PI * t * xi) * 0.001;
    CHECK(std::abs(ft - std::exp(-M_PI * xi * xi)) <= 1e-9);
  }

  CHECK_THROWS_AS(mollify(m, 0.0), DomainError);
}

TEST_CASE("configuration integral: Lebesgue-vs-parabola limit 5/12") {
  DiscreteMeasure mu = uniform_grid_measure(2, 24);
  CHECK(std::abs(mu.total_mass() - 1.0) <= 1e-12);

  CurveStd curve = parabola_curve();
  CurveMeasureParams p;
  p.curve = curve;
  p.j = curve.safe_scale_J0;
  p.c = Rational(1, 1000);
  p.n_quad = 512;
  DiscreteMeasure pi = curve_measure(p);

  std::vector<double> deltas;
  for (int k = 5; k <= 12; ++k) deltas.push_back(std::pow(2.0, -k));
  ConfigIntegralResult res = configuration_integral(mu, pi, deltas);

  // int_0^1 (1-s)(1-s^2) ds = 5/12 for the autocorrelation of Lebesgue
  // measure on the unit square evaluated along the parabola
  const double oracle = 5.0 / 12.0;
  REQUIRE(res.values.size() == deltas.size());
  for (double v : res.values) CHECK(std::abs(v - oracle) <= 0.02 * oracle);
  CHECK(std::abs(res.liminf_proxy - oracle) <= 0.02 * oracle);
  CHECK(res.liminf_proxy > 0);

  // linearity in pi
  DiscreteMeasure pi2 = pi;
  for (double& w : pi2.weights) w *= 2;
  ConfigIntegralResult res2 = configuration_integral(mu, pi2, {deltas[0]});
  CHECK(std::abs(res2.values[0] - 2 * res.values[0]) <= 1e-10);

  DiscreteMeasure bad = mu;
  for (double& w : bad.weights) w *= 2;
  CHECK_THROWS_AS(configuration_integral(bad, pi, deltas), NotProbability);
  CHECK_THROWS_AS(configuration_integral(mu, pi, {0.5, 0.5}), DomainError);
}

TEST_CASE("configuration integral vanishes when the pattern is absent") {
  DiscreteMeasure mu;
  mu.d = 2;
  mu.points = {{0.3, 0.7}};
  mu.weights = {1.0};

  CurveStd curve = parabola_curve();
  CurveMeasureParams p;
  p.curve = curve;
  p.j = curve.safe_scale_J0;
  p.c = Rational(1, 4);
  p.n_quad = 256;
  DiscreteMeasure pi = curve_measure(p);

  ConfigIntegralResult res = configuration_integral(mu, pi, default_delta_seq());
  CHECK(res.values.back() < 1e-12);
  CHECK(res.liminf_proxy < 1e-12);
  // the only difference is 0 and the curve support stays away from it, so
  // the values decay through the whole tail of the sequence
  CHECK(res.values.back() <= res.values.front() + 1e-18);
}

TEST_CASE("pattern witness: planted pattern, grid positivity, refusal") {
  CurveStd curve = parabola_curve();
  std::vector<RatPoly> phi = rescale(curve, curve.safe_scale_J0);
  std::vector<double> gamma{phi[0].eval_double(0.5), phi[1].eval_double(0.5)};

  DiscreteMeasure mu;
  mu.d = 2;
  mu.points = {{0.1, 0.2}, {0.1 + gamma[0], 0.2 + gamma[1]}};
  mu.weights = {0.5, 0.5};
  DiscreteMeasure pi;
  pi.d = 2;
  pi.points = {gamma};
  pi.weights = {1.0};

  PatternWitness w = pattern_witness(mu, pi, 1e-6);
  CHECK(w.residual <= 1e-12);
  for (int i = 0; i < 2; ++i) CHECK(std::abs(w.x[i] - w.y[i] - w.gamma[i]) <= 1e-15);

  // positive configuration integral over the grid produces a witness
  DiscreteMeasure grid = uniform_grid_measure(2, 16);
  CurveMeasureParams p;
  p.curve = curve;
  p.j = curve.safe_scale_J0;
  p.c = Rational(1, 100);
  p.n_quad = 512;
  DiscreteMeasure pim = curve_measure(p);
  double delta = 1.0 / 64;
  ConfigIntegralResult pos = configuration_integral(grid, pim, {delta});
  REQUIRE(pos.values[0] > 0);
  PatternWitness gw = pattern_witness(grid, pim, delta);
  CHECK(gw.residual <= std::sqrt(delta));
  CHECK(std::abs(norm2({gw.x[0] - gw.y[0] - gw.gamma[0], gw.x[1] - gw.y[1] - gw.gamma[1]}) -
                 gw.residual) <= 1e-15);

  // two nearby atoms cannot realize a pattern that starts a fixed distance out
  DiscreteMeasure tight;
  tight.d = 2;
  tight.points = {{0.5, 0.5}, {0.52, 0.5}};
  tight.weights = {0.5, 0.5};
  p.c = Rational(1, 2);
  DiscreteMeasure far = curve_measure(p);
  CHECK_THROWS_AS(pattern_witness(tight, far, 1.0 / 16), NoWitness);
}

TEST_CASE("uniform grid measure and csv round trip") {
  DiscreteMeasure m = uniform_grid_measure(2, 4);
  CHECK(m.points.size() == 16);
  CHECK(std::abs(m.total_mass() - 1.0) <= 1e-15);
  CHECK(m.label == "lebesgue-grid");
  REQUIRE(m.cell_sides.size() == 2);
  CHECK(m.cell_sides[0] == 0.25);

  std::stringstream ss;
  save_measure_csv(m, ss);
  DiscreteMeasure back = load_measure_csv(ss);
  CHECK(back.d == m.d);
  CHECK(back.label == m.label);
  REQUIRE(back.points.size() == m.points.size());
  for (size_t k = 0; k < m.points.size(); ++k) {
    CHECK(back.points[k] == m.points[k]);
    CHECK(back.weights[k] == m.weights[k]);
  }
  CHECK(back.cell_sides == m.cell_sides);

  std::stringstream bad("no header\n1,2,3\n");
  CHECK_THROWS_AS(load_measure_csv(bad), DomainError);
}

TEST_CASE("min_scale_J is finite and compatible with the decay guard") {
  CurveStd curve = parabola_curve();
  long J = min_scale_J(curve);
  CHECK(J >= 0);
  CHECK(J < 64);
  // a coarser cubic curve needs at least as deep a scale
  CurveStd cubic = make_monomial_curve({"t", "t^3"}, 3);
  CHECK(min_scale_J(cubic) >= 0);
}
