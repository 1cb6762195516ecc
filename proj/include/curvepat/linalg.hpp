#pragma once

#include <vector>

#include "curvepat/rational.hpp"

namespace curvepat {

using RatMatrix = std::vector<std::vector<Rational>>;

struct NullspaceResult {
  long rank = 0;
  // basis of {x : M x = 0}; vectors normalized to coprime integers with
  // positive first nonzero entry
  std::vector<std::vector<Rational>> basis;
};

// exact rank of M over the rationals (fraction-free Bareiss elimination on
// the cleared-denominator integer matrix)
long rat_rank(const RatMatrix& m);

NullspaceResult nullspace(const RatMatrix& m);

}  // namespace curvepat
