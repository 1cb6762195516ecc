#pragma once

#include <optional>
#include <string>
#include <vector>

#include "curvepat/curve.hpp"

namespace curvepat {

struct InvalidSubtype : DomainError {
  InvalidSubtype() : DomainError("subtype requires N >= m + d - 1") {}
};

struct ThresholdBounds {
  Rational s_bar;      // min{N/m, d - (d-1)m/N}
  Rational eps_upper;  // (d-1)/N
  unsigned subtype_m = 0;
  unsigned type_N = 0;
};

ThresholdBounds threshold_bounds(int d, unsigned N, unsigned m);

struct Verdict {
  enum class Status { Unavoidable, Avoidable } status;
  enum class Certificate { CommonZero, Dependence, NoCommonZero } certificate;

  // Dependence: u with u . Phi == 0 exactly
  std::vector<Rational> dependence_u;
  // NoCommonZero: the gcd witness (no root in I)
  RatPoly gcd_witness;
  // CommonZero: best (lowest-type) zero, its type, and (for rational zeros)
  // the standardized form
  std::optional<RootLoc> zero;
  std::optional<unsigned> type_N;  // nullopt only in degenerate sub-cases
  std::optional<CurveStd> standard_form;

  std::optional<ThresholdBounds> bounds;
};

Verdict classify(const CurveSpec& c);

std::string verdict_to_json(const Verdict& v);

struct HyperplaneResult {
  bool contained = false;
  std::vector<Rational> u;  // witness normal when contained
};

// hyperplane through the origin containing the image of Phi; affine
// hyperplanes are tested by augmenting with the constant polynomial 1
HyperplaneResult hyperplane_test(const CurveSpec& c, bool affine = false);

}  // namespace curvepat
