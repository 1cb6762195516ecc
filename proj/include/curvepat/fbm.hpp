#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "curvepat/curve.hpp"
#include "curvepat/errors.hpp"

namespace curvepat {

struct EmbeddingNotPSD : DomainError {
  using DomainError::DomainError;
};
struct BudgetExceeded : DomainError {
  using DomainError::DomainError;
};

// Sampled Hoelder graph F_s: d-1 fractional Brownian paths over t_grid with
// gamma = min{2/s, 2(d-s)/(d-1)} and Hurst index gamma/2.
struct FbmGraphSample {
  double s = 0;
  int d = 0;
  double gamma = 0;
  double hurst = 0;
  std::vector<double> t_grid;
  std::vector<std::vector<double>> values;  // values[i] in R^{d-1}
  std::uint64_t seed = 0;
};

// Davies-Harte circulant embedding on increments, cumulative summed; dense
// Cholesky fallback when the circulant eigenvalues dip negative and n <= 2^12.
FbmGraphSample fbm_graph(double s, int d, int n, std::uint64_t seed);

// sup norm plus the max difference quotient |F(t)-F(t')| / |t-t'|^alpha over
// a dyadic-lag subsample of grid pairs
double holder_estimate(const FbmGraphSample& g, double alpha);

struct DimEstimate {
  double dim = 0;
  double residual = 0;  // max absolute deviation of the log-log fit
};

// box-counting dimension of the graph set {(t_i, F(t_i))}
DimEstimate graph_dim_estimate(const FbmGraphSample& g);

struct AvoidanceReport {
  bool exact_mode = false;
  bool certified = false;
  double separation = 0;
  double tol = 0;
  std::vector<double> u;
  std::size_t pairs_checked = 0;
  std::string note;
};

// exact polynomial mode: u . Phi == 0 certifies that any curve point in
// K - K is the origin (deterministic, seed independent)
AvoidanceReport avoidance_experiment(const CurveSpec& c, const std::vector<Rational>& u);

// sampled mode: K = rotated graph samples in the densest r-cell; reports the
// minimum distance from the curve samples (|gamma| > tol) to K - K, clipped
// from above by the hash resolution
AvoidanceReport avoidance_experiment(const std::vector<std::vector<double>>& curve_samples,
                                     const FbmGraphSample& g, const std::vector<double>& u,
                                     double r, double tol);

// columnar binary (t_grid then the paths) plus a JSON sidecar
void save_fbm(const FbmGraphSample& g, std::ostream& data, std::ostream& sidecar);
FbmGraphSample load_fbm(std::istream& data, std::istream& sidecar);

std::string avoidance_to_json(const AvoidanceReport& r);

}  // namespace curvepat
