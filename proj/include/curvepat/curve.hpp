#pragma once

#include <optional>
#include <string>
#include <vector>

#include "curvepat/linalg.hpp"
#include "curvepat/polynomial.hpp"
#include "curvepat/rational.hpp"

namespace curvepat {

// Polynomial curve Phi: [lo, hi] -> R^d given componentwise.
struct CurveSpec {
  std::vector<RatPoly> components;
  Rational lo, hi;
  int dim() const { return static_cast<int>(components.size()); }
};

// text format: d=<int>; I=[<rat>,<rat>]; phi1=<poly>; ...; phid=<poly>
// also accepts the JSON mirror {"d":..., "I":[...,...], "phi1":..., ...}
CurveSpec load_curve_spec(const std::string& text);
std::string render_curve_spec(const CurveSpec& c);
std::string curve_spec_to_json(const CurveSpec& c);

struct ZeroComponent : DomainError {
  ZeroComponent() : DomainError("a curve component is identically zero") {}
};

struct VanishingPattern {
  std::vector<unsigned> orders;
  Rational base_point;
};

struct CurveStd {
  std::vector<RatPoly> components;     // Phi_i(t) = t^{n_i} phi_i(t), phi_i(0) = 1
  std::vector<unsigned> pattern;       // n, strictly increasing, back() == type_N
  unsigned type_N = 0;
  RatMatrix transform_L;               // invertible, maps the recentered/reparametrized curve
  Rational base_point;                 // t0 in the original parameter
  Rational domain_scale;               // the a/b factor of the [0,1] reparametrization
  long safe_scale_J0 = 0;              // c1/c2 bounds certified on [0, 2^-J0]
  Integer K_N() const;                 // 2 * N!
};

std::string curve_std_to_json(const CurveStd& s);

// all zeros of Phi in [lo, hi]
std::vector<RootLoc> find_common_zeros(const CurveSpec& c);

VanishingPattern vanishing_pattern(const CurveSpec& c, const Rational& t0);

// smallest N with span{Phi'(t0), ..., Phi^(N)(t0)} = R^d; nullopt when the
// span never reaches R^d (components linearly dependent after recentering)
std::optional<unsigned> type_at(const CurveSpec& c, const Rational& t0);

// same, at an algebraic point given by its defining squarefree polynomial and
// isolating interval; exact (rank over Q[t]/(g) with Sturm-certified zero tests)
std::optional<unsigned> type_at(const CurveSpec& c, const RatPoly& defining, const RootLoc& root);

CurveStd standardize(const CurveSpec& c, const Rational& t0, unsigned N);

// Phi^j_i(t) = 2^{n_i j} Phi_i(2^-j t), exact on coefficients
std::vector<RatPoly> rescale(const CurveStd& s, long j);

}  // namespace curvepat
