#include "curvepat/fbm.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstring>
#include <iostream>
#include <limits>
#include <random>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "curvepat/polynomial.hpp"

namespace curvepat {

namespace {

// hand-rolled Box-Muller so the stream is identical across standard libraries
struct Gaussians {
  std::mt19937_64 rng;
  bool have_spare = false;
  double spare = 0;
  explicit Gaussians(std::uint64_t seed) : rng(seed) {}
  double operator()() {
    if (have_spare) {
      have_spare = false;
      return spare;
    }
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    double u = 0;
    while (u == 0.0) u = unif(rng);
    double v = unif(rng);
    double r = std::sqrt(-2.0 * std::log(u));
    spare = r * std::sin(2.0 * M_PI * v);
    have_spare = true;
    return r * std::cos(2.0 * M_PI * v);
  }
};

// covariance of unit-spacing fBm increments at lag k
double increment_cov(double H, long k) {
  auto p = [H](double x) { return std::pow(std::abs(x), 2.0 * H); };
  return 0.5 * (p(k + 1.0) - 2.0 * p(static_cast<double>(k)) + p(k - 1.0));
}

std::vector<double> fbm_increments_cholesky(double H, int m, Gaussians& gauss) {
  // dense lower-triangular factor of the Toeplitz increment covariance
  std::vector<double> L(static_cast<size_t>(m) * m, 0.0);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j <= i; ++j) {
      double acc = increment_cov(H, i - j);
      for (int k = 0; k < j; ++k) acc -= L[i * static_cast<size_t>(m) + k] * L[j * static_cast<size_t>(m) + k];
      if (i == j) {
        if (acc <= 0) throw EmbeddingNotPSD("fbm_graph: Cholesky fallback failed");
        L[i * static_cast<size_t>(m) + j] = std::sqrt(acc);
      } else {
        L[i * static_cast<size_t>(m) + j] = acc / L[j * static_cast<size_t>(m) + j];
      }
    }
  }
  std::vector<double> z(static_cast<size_t>(m));
  for (double& v : z) v = gauss();
  std::vector<double> out(static_cast<size_t>(m), 0.0);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j <= i; ++j) out[static_cast<size_t>(i)] += L[i * static_cast<size_t>(m) + j] * z[static_cast<size_t>(j)];
  return out;
}

// Davies-Harte: m unit-spacing increments from the circulant embedding of
// the lag covariance; eigenvalues slightly negative from rounding are clamped
std::vector<double> fbm_increments(double H, int m, Gaussians& gauss) {
  const int M = 2 * m;
  std::vector<double> row(static_cast<size_t>(M));
  for (int k = 0; k < m; ++k) row[static_cast<size_t>(k)] = increment_cov(H, k);
  row[static_cast<size_t>(m)] = increment_cov(H, m);
  for (int k = m + 1; k < M; ++k) row[static_cast<size_t>(k)] = row[static_cast<size_t>(M - k)];

  std::vector<std::complex<double>> buf(static_cast<size_t>(M));
  for (int k = 0; k < M; ++k) buf[static_cast<size_t>(k)] = row[static_cast<size_t>(k)];
  fftw_plan plan = fftw_plan_dft_1d(M, reinterpret_cast<fftw_complex*>(buf.data()),
                                    reinterpret_cast<fftw_complex*>(buf.data()), FFTW_FORWARD,
                                    FFTW_ESTIMATE);
  fftw_execute(plan);

  double max_ev = 0;
  for (const auto& v : buf) max_ev = std::max(max_ev, v.real());
  std::vector<double> lambda(static_cast<size_t>(M));
  for (int k = 0; k < M; ++k) {
    double ev = buf[static_cast<size_t>(k)].real();
    if (ev < -1e-9 * std::max(1.0, max_ev)) {
      fftw_destroy_plan(plan);
      if (m <= (1 << 12)) return fbm_increments_cholesky(H, m, gauss);
      throw EmbeddingNotPSD("fbm_graph: circulant eigenvalue below tolerance");
    }
    lambda[static_cast<size_t>(k)] = std::max(ev, 0.0);
  }

  // conjugate-symmetric Gaussian spectrum
  buf[0] = std::sqrt(lambda[0] / M) * gauss();
  buf[static_cast<size_t>(m)] = std::sqrt(lambda[static_cast<size_t>(m)] / M) * gauss();
  for (int k = 1; k < m; ++k) {
    double a = gauss(), b = gauss();
    std::complex<double> z(a, b);
    buf[static_cast<size_t>(k)] = std::sqrt(lambda[static_cast<size_t>(k)] / (2.0 * M)) * z;
    buf[static_cast<size_t>(M - k)] = std::conj(buf[static_cast<size_t>(k)]);
  }
  fftw_execute(plan);
  fftw_destroy_plan(plan);

  std::vector<double> out(static_cast<size_t>(m));
  for (int k = 0; k < m; ++k) out[static_cast<size_t>(k)] = buf[static_cast<size_t>(k)].real();
  return out;
}

double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
  double r = 0;
  for (size_t i = 0; i < a.size(); ++i) r += (a[i] - b[i]) * (a[i] - b[i]);
  return r;
}

// orthogonal map sending e1 to the unit vector u (Householder reflection)
std::vector<double> apply_e1_to_u(const std::vector<double>& u, const std::vector<double>& x) {
  const size_t d = u.size();
  std::vector<double> v(d);
  v[0] = 1.0 - u[0];
  for (size_t i = 1; i < d; ++i) v[i] = -u[i];
  double vv = 0;
  for (double c : v) vv += c * c;
  if (vv < 1e-30) return x;
  double vx = 0;
  for (size_t i = 0; i < d; ++i) vx += v[i] * x[i];
  std::vector<double> out(d);
  for (size_t i = 0; i < d; ++i) out[i] = x[i] - 2.0 * (vx / vv) * v[i];
  return out;
}

struct CellHash {
  std::size_t operator()(const std::vector<long>& v) const {
    std::size_t h = 1469598103934665603ull;
    for (long c : v) {
      h ^= static_cast<std::size_t>(c);
      h *= 1099511628211ull;
    }
    return h;
  }
};

std::vector<long> cell_of(const std::vector<double>& x, double h) {
  std::vector<long> c(x.size());
  for (size_t i = 0; i < x.size(); ++i) c[i] = static_cast<long>(std::floor(x[i] / h));
  return c;
}

const std::size_t kPairBudget = 50000000;

}  // namespace

FbmGraphSample fbm_graph(double s, int d, int n, std::uint64_t seed) {
  if (!(s >= 1.0) || !(s < d)) throw PreconditionError("fbm_graph: need 1 <= s < d");
  if (n < (1 << 10) || (n & (n - 1)) != 0)
    throw PreconditionError("fbm_graph: n must be a power of two >= 2^10");

  FbmGraphSample g;
  g.s = s;
  g.d = d;
  g.gamma = std::min(2.0 / s, 2.0 * (d - s) / (d - 1));
  g.hurst = g.gamma / 2.0;
  g.seed = seed;
  g.t_grid.resize(static_cast<size_t>(n));
  const int m = n - 1;  // increments
  for (int i = 0; i < n; ++i) g.t_grid[static_cast<size_t>(i)] = static_cast<double>(i) / m;

  g.values.assign(static_cast<size_t>(n), std::vector<double>(static_cast<size_t>(d - 1), 0.0));
  const double scale = std::pow(1.0 / m, g.hurst);  // unit-spacing path onto [0,1]
  for (int path = 0; path < d - 1; ++path) {
    Gaussians gauss(seed ^ (0x9E3779B97F4A7C15ull * static_cast<std::uint64_t>(path + 1)));
    if (g.hurst > 1.0 - 1e-12) {
      double z = gauss();  // H = 1 degenerates to the line t -> t Z
      for (int i = 0; i < n; ++i)
        g.values[static_cast<size_t>(i)][static_cast<size_t>(path)] = g.t_grid[static_cast<size_t>(i)] * z;
      continue;
    }
    std::vector<double> inc = fbm_increments(g.hurst, m, gauss);
    double acc = 0;
    for (int i = 1; i < n; ++i) {
      acc += inc[static_cast<size_t>(i - 1)];
      g.values[static_cast<size_t>(i)][static_cast<size_t>(path)] = scale * acc;
    }
  }
  return g;
}

double holder_estimate(const FbmGraphSample& g, double alpha) {
  if (!(alpha > 0) || !(alpha < 1)) throw PreconditionError("holder_estimate: need 0 < alpha < 1");
  const size_t n = g.t_grid.size();
  double sup = 0, semi = 0;
  for (const auto& v : g.values)
    for (double c : v) sup = std::max(sup, std::abs(c));
  for (size_t lag = 1; lag < n; lag *= 2) {
    size_t stride = std::max<size_t>(1, n * lag / (1 << 22));
    for (size_t i = 0; i + lag < n; i += stride) {
      double dt = g.t_grid[i + lag] - g.t_grid[i];
      double dist = std::sqrt(sq_dist(g.values[i + lag], g.values[i]));
      semi = std::max(semi, dist / std::pow(dt, alpha));
    }
  }
  return sup + semi;
}

DimEstimate graph_dim_estimate(const FbmGraphSample& g) {
  if (g.t_grid.size() < (1u << 14)) throw PreconditionError("graph_dim_estimate: need n >= 2^14");
  // coarse levels bias the slope low; fit only where columns hold many samples
  const int k_hi = static_cast<int>(std::log2(static_cast<double>(g.t_grid.size())) / 2.0);
  const int k_lo = std::max(2, k_hi - 3);
  std::vector<double> xs, ys;
  for (int k = k_lo; k <= k_hi; ++k) {
    double eps = std::pow(2.0, -k);
    std::unordered_set<std::vector<long>, CellHash> cells;
    std::vector<double> pt(static_cast<size_t>(g.d));
    for (size_t i = 0; i < g.t_grid.size(); ++i) {
      pt[0] = g.t_grid[i];
      for (int c = 0; c < g.d - 1; ++c) pt[static_cast<size_t>(c + 1)] = g.values[i][static_cast<size_t>(c)];
      cells.insert(cell_of(pt, eps));
    }
    xs.push_back(k);  // log2(1/eps)
    ys.push_back(std::log2(static_cast<double>(cells.size())));
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(xs.size());
  for (size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  DimEstimate est;
  est.dim = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  double intercept = (sy - est.dim * sx) / n;
  for (size_t i = 0; i < xs.size(); ++i)
    est.residual = std::max(est.residual, std::abs(ys[i] - est.dim * xs[i] - intercept));
  return est;
}

AvoidanceReport avoidance_experiment(const CurveSpec& c, const std::vector<Rational>& u) {
  if (u.size() != c.components.size())
    throw PreconditionError("avoidance_experiment: dimension mismatch");
  RatPoly dot;
  for (size_t i = 0; i < u.size(); ++i) dot = dot + RatPoly({u[i]}) * c.components[i];
  if (!dot.is_zero())
    throw PreconditionError("avoidance_experiment: u . Phi is not identically zero");

  // with U e1 = u, every x in K = U(graph) satisfies u . x = t; a curve point
  // gamma = x - x' in K - K forces t = t' and hence gamma = 0
  AvoidanceReport rep;
  rep.exact_mode = true;
  rep.certified = true;
  rep.separation = std::numeric_limits<double>::infinity();
  double nrm = 0;
  for (const auto& q : u) nrm += q.get_d() * q.get_d();
  nrm = std::sqrt(nrm);
  for (const auto& q : u) rep.u.push_back(q.get_d() / nrm);
  rep.note = "u annihilates Phi: any realized pattern collapses to the origin";
  return rep;
}

AvoidanceReport avoidance_experiment(const std::vector<std::vector<double>>& curve_samples,
                                     const FbmGraphSample& g, const std::vector<double>& u,
                                     double r, double tol) {
  if (static_cast<int>(u.size()) != g.d)
    throw PreconditionError("avoidance_experiment: dimension mismatch");
  if (!(r > 0) || !(tol >= 0)) throw PreconditionError("avoidance_experiment: bad r or tol");

  // rotated graph samples
  std::vector<std::vector<double>> pts;
  pts.reserve(g.t_grid.size());
  std::vector<double> x(static_cast<size_t>(g.d));
  for (size_t i = 0; i < g.t_grid.size(); ++i) {
    x[0] = g.t_grid[i];
    for (int c = 0; c < g.d - 1; ++c) x[static_cast<size_t>(c + 1)] = g.values[i][static_cast<size_t>(c)];
    pts.push_back(apply_e1_to_u(u, x));
  }

  // densest r-cell of the coarse partition stands in for the cube Q_r; the
  // proof's choice is nonconstructive, so this substitution is flagged
  std::unordered_map<std::vector<long>, std::size_t, CellHash> counts;
  for (const auto& p : pts) ++counts[cell_of(p, r)];
  std::vector<long> best_cell;
  std::size_t best = 0;
  for (const auto& [cell, cnt] : counts)
    if (cnt > best || (cnt == best && (best_cell.empty() || cell < best_cell))) {
      best = cnt;
      best_cell = cell;
    }
  std::vector<std::vector<double>> K;
  for (const auto& p : pts)
    if (cell_of(p, r) == best_cell) K.push_back(p);

  if (curve_samples.size() * K.size() > kPairBudget)
    throw BudgetExceeded("avoidance_experiment: pair budget exceeded");

  // spatial hash over K; for each curve sample gamma and base point k_b we
  // probe the neighborhood of k_b + gamma, so K - K is never materialized
  const double h = r / 8.0;
  std::unordered_map<std::vector<long>, std::vector<std::size_t>, CellHash> grid;
  for (std::size_t i = 0; i < K.size(); ++i) grid[cell_of(K[i], h)].push_back(i);

  AvoidanceReport rep;
  rep.exact_mode = false;
  rep.tol = tol;
  rep.u = u;
  rep.note = "Q_r taken as the densest cell of a coarse partition (heuristic stand-in)";
  double best_d2 = h * h;  // distances beyond one hash cell are clipped at h
  std::vector<long> probe(static_cast<size_t>(g.d));
  std::vector<double> target(static_cast<size_t>(g.d));
  for (const auto& gam : curve_samples) {
    double gn = 0;
    for (double v : gam) gn += v * v;
    if (gn <= tol * tol) continue;
    for (const auto& kb : K) {
      for (int i = 0; i < g.d; ++i) target[static_cast<size_t>(i)] = kb[static_cast<size_t>(i)] + gam[static_cast<size_t>(i)];
      ++rep.pairs_checked;
      std::vector<long> base = cell_of(target, h);
      // scan the 3^d neighborhood of the probe cell
      std::vector<int> off(static_cast<size_t>(g.d), -1);
      while (true) {
        for (int i = 0; i < g.d; ++i) probe[static_cast<size_t>(i)] = base[static_cast<size_t>(i)] + off[static_cast<size_t>(i)];
        auto it = grid.find(probe);
        if (it != grid.end())
          for (std::size_t idx : it->second) best_d2 = std::min(best_d2, sq_dist(target, K[idx]));
        int carry = 0;
        while (carry < g.d && ++off[static_cast<size_t>(carry)] > 1) off[static_cast<size_t>(carry++)] = -1;
        if (carry == g.d) break;
      }
    }
  }
  rep.separation = std::sqrt(best_d2);
  return rep;
}

void save_fbm(const FbmGraphSample& g, std::ostream& data, std::ostream& sidecar) {
  data.write(reinterpret_cast<const char*>(g.t_grid.data()),
             static_cast<std::streamsize>(g.t_grid.size() * sizeof(double)));
  for (int c = 0; c < g.d - 1; ++c)
    for (const auto& row : g.values)
      data.write(reinterpret_cast<const char*>(&row[static_cast<size_t>(c)]), sizeof(double));
  nlohmann::json j{{"s", g.s},         {"d", g.d},       {"gamma", g.gamma},
                   {"hurst", g.hurst}, {"seed", g.seed}, {"n", g.t_grid.size()}};
  sidecar << j.dump(2) << "\n";
}

FbmGraphSample load_fbm(std::istream& data, std::istream& sidecar) {
  nlohmann::json j;
  sidecar >> j;
  FbmGraphSample g;
  g.s = j.at("s").get<double>();
  g.d = j.at("d").get<int>();
  g.gamma = j.at("gamma").get<double>();
  g.hurst = j.at("hurst").get<double>();
  g.seed = j.at("seed").get<std::uint64_t>();
  const std::size_t n = j.at("n").get<std::size_t>();
  g.t_grid.resize(n);
  data.read(reinterpret_cast<char*>(g.t_grid.data()),
            static_cast<std::streamsize>(n * sizeof(double)));
  g.values.assign(n, std::vector<double>(static_cast<size_t>(g.d - 1)));
  for (int c = 0; c < g.d - 1; ++c)
    for (std::size_t i = 0; i < n; ++i)
      data.read(reinterpret_cast<char*>(&g.values[i][static_cast<size_t>(c)]), sizeof(double));
  if (!data) throw DomainError("load_fbm: truncated data stream");
  return g;
}

std::string avoidance_to_json(const AvoidanceReport& r) {
  nlohmann::json j{{"exact_mode", r.exact_mode},
                   {"certified", r.certified},
                   {"separation", r.separation},
                   {"tol", r.tol},
                   {"u", r.u},
                   {"pairs_checked", r.pairs_checked},
                   {"note", r.note}};
  return j.dump(2);
}

}  // namespace curvepat
