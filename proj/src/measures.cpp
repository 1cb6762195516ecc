#include "curvepat/measures.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <map>
#include <sstream>

#include "curvepat/curve.hpp"

namespace curvepat {

namespace {

void gauss_legendre_unit(int n, std::vector<double>& x, std::vector<double>& w) {
  x.resize(static_cast<size_t>(n));
  w.resize(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    double t = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double p1 = 0, dp = 0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1;
      p1 = t;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2 * k - 1) * t * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (t * p1 - p0) / (t * t - 1);
      double dt = p1 / dp;
      t -= dt;
      if (std::abs(dt) < 1e-15) break;
    }
    x[static_cast<size_t>(i)] = 0.5 * (1.0 - t);
    w[static_cast<size_t>(i)] = 1.0 / ((1.0 - t * t) * dp * dp);
  }
}

const int kPanelNodes = 16;

struct Kahan {
  double sum = 0, comp = 0;
  void add(double v) {
    double y = v - comp;
    double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
};

// upper bound for sup_{[0,1]} |p| by the coefficient sum
double coeff_sum_bound(const RatPoly& p) {
  double acc = 0;
  for (const auto& c : p.coeffs()) acc += std::abs(c.get_d());
  return acc;
}

double norm2(const std::vector<double>& v) {
  double r = 0;
  for (double x : v) r += x * x;
  return std::sqrt(r);
}

}  // namespace

double DiscreteMeasure::total_mass() const {
  Kahan acc;
  for (double w : weights) acc.add(w);
  return acc.sum;
}

long min_scale_J(const CurveStd& curve) {
  const int d = static_cast<int>(curve.components.size());
  const double K_N = mpz_class(curve.K_N()).get_d();
  const double a = 1.0 / (8.0 * d * K_N);
  double cn_norm = 0;  // max_{i, k <= N} sup |Phi_i^{(k)}| on [0,1]
  for (const auto& comp : curve.components)
    for (unsigned k = 0; k <= curve.type_N; ++k)
      cn_norm = std::max(cn_norm, coeff_sum_bound(comp.derivative(k)));
  double lhs = d * std::pow(a, -d) * cn_norm;
  long J = 0;
  while (lhs * std::pow(2.0, -static_cast<double>(J)) > 0.125) ++J;
  return J;
}

DiscreteMeasure curve_measure(const CurveMeasureParams& p) {
  if (p.j < p.curve.safe_scale_J0)
    throw ScaleTooSmall("curve_measure: j below the certified scale J0");
  if (!(p.c > 0) || p.c > 1) throw DomainError("curve_measure: need 0 < c <= 1");
  if (p.n_quad < 1) throw DomainError("curve_measure: need n_quad >= 1");

  std::vector<RatPoly> phi_j = rescale(p.curve, p.j);
  static thread_local std::vector<double> gx, gw;
  if (gx.empty()) gauss_legendre_unit(kPanelNodes, gx, gw);

  const int panels = std::max(1, p.n_quad / kPanelNodes);
  const double c = p.c.get_d();
  const double len = (1.0 - c) / panels;

  DiscreteMeasure m;
  m.d = static_cast<int>(phi_j.size());
  m.label = "curve";
  for (int pa = 0; pa < panels; ++pa) {
    double lo = c + pa * len;
    for (int k = 0; k < kPanelNodes; ++k) {
      double s = lo + len * gx[static_cast<size_t>(k)];
      std::vector<double> pt(phi_j.size());
      for (size_t i = 0; i < phi_j.size(); ++i) pt[i] = phi_j[i].eval_double(s);
      m.points.push_back(std::move(pt));
      m.weights.push_back(len * gw[static_cast<size_t>(k)]);
    }
  }
  return m;
}

std::complex<double> fourier(const DiscreteMeasure& m, const std::vector<double>& xi) {
  Kahan re, im;
  for (size_t k = 0; k < m.points.size(); ++k) {
    double phase = 0;
    for (size_t i = 0; i < xi.size(); ++i) phase += m.points[k][i] * xi[i];
    re.add(m.weights[k] * std::cos(-2.0 * M_PI * phase));
    im.add(m.weights[k] * std::sin(-2.0 * M_PI * phase));
  }
  return {re.sum, im.sum};
}

std::complex<double> pi_hat(const CurveStd& curve, long j, const Rational& c,
                            const std::vector<double>& xi) {
  std::vector<RatPoly> phi_j = rescale(curve, j);
  static thread_local std::vector<double> gx, gw;
  if (gx.empty()) gauss_legendre_unit(kPanelNodes, gx, gw);

  // phase variation bound: sum_i |xi_i| sup |d Phi^j_i / ds|
  double variation = 0;
  for (size_t i = 0; i < phi_j.size(); ++i)
    variation += std::abs(xi[i]) * coeff_sum_bound(phi_j[i].derivative());
  const double cd = c.get_d();
  variation *= (1.0 - cd);
  int panels = static_cast<int>(std::min(200000.0, std::max(8.0, std::ceil(variation / 3.0))));

  const double len = (1.0 - cd) / panels;
  Kahan re, im;
  for (int pa = 0; pa < panels; ++pa) {
    double lo = cd + pa * len;
    for (int k = 0; k < kPanelNodes; ++k) {
      double s = lo + len * gx[static_cast<size_t>(k)];
      double phase = 0;
      for (size_t i = 0; i < phi_j.size(); ++i) phase += xi[i] * phi_j[i].eval_double(s);
      double w = len * gw[static_cast<size_t>(k)];
      re.add(w * std::cos(-2.0 * M_PI * phase));
      im.add(w * std::sin(-2.0 * M_PI * phase));
    }
  }
  return {re.sum, im.sum};
}

DecayReport verify_decay(const CurveStd& curve, const ConstantBundle& bundle,
                         const std::vector<long>& j_list, const std::vector<Rational>& c_list,
                         const std::vector<std::vector<double>>& xi_grid) {
  const long J = std::max(min_scale_J(curve), curve.safe_scale_J0);
  for (long j : j_list)
    if (j < J) throw PreconditionError("verify_decay: j below J(Phi)");

  DecayReport rep;
  rep.L_N = bundle.L_N.convert_to<double>();
  rep.max_ratio = 0;
  const double invN = 1.0 / static_cast<double>(curve.type_N);
  for (long j : j_list)
    for (const auto& c : c_list)
      for (const auto& xi : xi_grid) {
        double mod = std::abs(pi_hat(curve, j, c, xi));
        double ratio = mod * std::pow(1.0 + norm2(xi), invN);
        ++rep.samples;
        if (ratio > rep.max_ratio) {
          rep.max_ratio = ratio;
          rep.arg_max = {j, c.get_d(), xi, mod, ratio};
        }
      }
  rep.all_within_bound = rep.max_ratio <= rep.L_N;
  return rep;
}

double ball_mass(const DiscreteMeasure& m, const std::vector<double>& center, double r) {
  if (!(r > 0)) throw DomainError("ball_mass: radius must be positive");
  Kahan acc;
  for (size_t k = 0; k < m.points.size(); ++k) {
    double d2 = 0;
    for (size_t i = 0; i < center.size(); ++i)
      d2 += (m.points[k][i] - center[i]) * (m.points[k][i] - center[i]);
    if (d2 <= r * r) acc.add(m.weights[k]);
  }
  return acc.sum;
}

std::function<double(const std::vector<double>&)> mollify(const DiscreteMeasure& m, double delta) {
  if (!(delta > 0)) throw DomainError("mollify: delta must be positive");
  DiscreteMeasure copy = m;
  int d = m.d;
  return [copy, delta, d](const std::vector<double>& x) {
    Kahan acc;
    for (size_t k = 0; k < copy.points.size(); ++k) {
      double r2 = 0;
      for (size_t i = 0; i < x.size(); ++i)
        r2 += (x[i] - copy.points[k][i]) * (x[i] - copy.points[k][i]);
      acc.add(copy.weights[k] * std::exp(-M_PI * r2 / (delta * delta)));
    }
    return acc.sum / std::pow(delta, d);
  };
}

std::vector<double> default_delta_seq() {
  std::vector<double> out;
  for (int k = 3; k <= 12; ++k) out.push_back(std::pow(2.0, -k));
  return out;
}

namespace {

// compressed difference multiset of mu: x_a - x_b with accumulated weights
struct DiffTable {
  std::vector<std::vector<double>> diffs;
  std::vector<double> weights;
};

DiffTable compress_differences(const DiscreteMeasure& mu) {
  std::map<std::vector<long long>, std::pair<std::vector<double>, double>> table;
  const size_t n = mu.points.size();
  for (size_t a = 0; a < n; ++a)
    for (size_t b = 0; b < n; ++b) {
      std::vector<double> diff(mu.points[a].size());
      std::vector<long long> key(diff.size());
      for (size_t i = 0; i < diff.size(); ++i) {
        diff[i] = mu.points[a][i] - mu.points[b][i];
        key[i] = llround(diff[i] * 1e9);
      }
      auto it = table.find(key);
      if (it == table.end())
        table.emplace(std::move(key), std::make_pair(std::move(diff), mu.weights[a] * mu.weights[b]));
      else
        it->second.second += mu.weights[a] * mu.weights[b];
    }
  DiffTable out;
  out.diffs.reserve(table.size());
  for (auto& [k, v] : table) {
    (void)k;
    out.diffs.push_back(std::move(v.first));
    out.weights.push_back(v.second);
  }
  return out;
}

// per-dimension factor of (u_cell * u_cell * psi_delta) at offset t, where
// u_cell is the uniform density on a cell of side h: the tent of half-width h
// smoothed by the 1-d Gaussian; S'' = gaussian with S as below
double cell_kernel_1d(double t, double h, double delta) {
  auto S = [delta](double v) {
    double G = 0.5 * (1.0 + std::erf(std::sqrt(M_PI) * v / delta));
    return v * G + (delta / (2.0 * M_PI)) * std::exp(-M_PI * v * v / (delta * delta));
  };
  return (S(t + h) - 2.0 * S(t) + S(t - h)) / (h * h);
}

double point_kernel_1d(double t, double delta) {
  return std::exp(-M_PI * t * t / (delta * delta)) / delta;
}

}  // namespace

ConfigIntegralResult configuration_integral(const DiscreteMeasure& mu, const DiscreteMeasure& pi,
                                            std::vector<double> delta_seq) {
  if (std::abs(mu.total_mass() - 1.0) > 1e-9)
    throw NotProbability("configuration_integral: mu must be a probability measure");
  if (delta_seq.empty()) delta_seq = default_delta_seq();
  for (size_t k = 0; k + 1 < delta_seq.size(); ++k)
    if (!(delta_seq[k] > delta_seq[k + 1]) || !(delta_seq.back() > 0))
      throw DomainError("configuration_integral: delta_seq must be strictly decreasing, positive");

  DiffTable diffs = compress_differences(mu);
  const bool cells = !mu.cell_sides.empty();

  ConfigIntegralResult res;
  res.deltas = delta_seq;
  double running = std::numeric_limits<double>::infinity();
  for (double delta : delta_seq) {
    Kahan acc;
    for (size_t d_idx = 0; d_idx < diffs.diffs.size(); ++d_idx) {
      const auto& D = diffs.diffs[d_idx];
      Kahan inner;
      for (size_t k = 0; k < pi.points.size(); ++k) {
        double prod = 1;
        for (size_t i = 0; i < D.size(); ++i) {
          double t = D[i] - pi.points[k][i];
          prod *= cells ? cell_kernel_1d(t, mu.cell_sides[i], delta) : point_kernel_1d(t, delta);
          if (prod == 0) break;
        }
        inner.add(pi.weights[k] * prod);
      }
      acc.add(diffs.weights[d_idx] * inner.sum);
    }
    res.values.push_back(acc.sum);
    running = std::min(running, std::abs(acc.sum));
  }
  res.liminf_proxy = running;
  return res;
}

PatternWitness pattern_witness(const DiscreteMeasure& mu, const DiscreteMeasure& pi, double delta) {
  if (!(delta > 0)) throw DomainError("pattern_witness: delta must be positive");
  double best = std::numeric_limits<double>::infinity();
  PatternWitness w;
  const size_t n = mu.points.size();
  for (size_t a = 0; a < n; ++a) {
    if (mu.weights[a] <= 0) continue;
    for (size_t b = 0; b < n; ++b) {
      if (mu.weights[b] <= 0) continue;
      for (size_t k = 0; k < pi.points.size(); ++k) {
        if (pi.weights[k] <= 0) continue;
        double r2 = 0;
        for (size_t i = 0; i < mu.points[a].size(); ++i) {
          double v = mu.points[a][i] - mu.points[b][i] - pi.points[k][i];
          r2 += v * v;
        }
        if (r2 < best) {
          best = r2;
          w.x = mu.points[a];
          w.y = mu.points[b];
          w.gamma = pi.points[k];
        }
      }
    }
  }
  if (!std::isfinite(best)) throw NoWitness("pattern_witness: empty measures");
  w.residual = std::sqrt(best);
  if (w.residual > std::sqrt(delta))
    throw NoWitness("pattern_witness: best residual " + std::to_string(w.residual) +
                    " exceeds sqrt(delta)");
  return w;
}

DiscreteMeasure uniform_grid_measure(int d, int per_side) {
  DiscreteMeasure m;
  m.d = d;
  m.label = "lebesgue-grid";
  double h = 1.0 / per_side;
  m.cell_sides.assign(static_cast<size_t>(d), h);
  double w = std::pow(h, d);
  std::vector<int> idx(static_cast<size_t>(d), 0);
  while (true) {
    std::vector<double> pt(static_cast<size_t>(d));
    for (int i = 0; i < d; ++i) pt[static_cast<size_t>(i)] = (idx[static_cast<size_t>(i)] + 0.5) * h;
    m.points.push_back(std::move(pt));
    m.weights.push_back(w);
    int c = 0;
    while (c < d && ++idx[static_cast<size_t>(c)] == per_side) idx[static_cast<size_t>(c++)] = 0;
    if (c == d) break;
  }
  return m;
}

void save_measure_csv(const DiscreteMeasure& m, std::ostream& os) {
  os.precision(17);
  os << "# d=" << m.d << " label=" << m.label;
  if (!m.cell_sides.empty()) {
    os << " cells=";
    for (size_t i = 0; i < m.cell_sides.size(); ++i) os << (i ? "," : "") << m.cell_sides[i];
  }
  os << "\n";
  for (size_t k = 0; k < m.points.size(); ++k) {
    for (double v : m.points[k]) os << v << ",";
    os << m.weights[k] << "\n";
  }
}

DiscreteMeasure load_measure_csv(std::istream& is) {
  DiscreteMeasure m;
  std::string line;
  if (!std::getline(is, line) || line.rfind("# d=", 0) != 0)
    throw DomainError("load_measure_csv: missing header");
  {
    std::istringstream hs(line.substr(4));
    hs >> m.d;
    auto lp = line.find("label=");
    if (lp != std::string::npos) {
      m.label = line.substr(lp + 6);
      auto sp = m.label.find(' ');
      if (sp != std::string::npos) m.label.resize(sp);
    }
    auto cp = line.find("cells=");
    if (cp != std::string::npos) {
      std::istringstream cs(line.substr(cp + 6));
      std::string tok;
      while (std::getline(cs, tok, ',')) m.cell_sides.push_back(std::stod(tok));
    }
  }
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string tok;
    std::vector<double> vals;
    while (std::getline(ls, tok, ',')) vals.push_back(std::stod(tok));
    if (static_cast<int>(vals.size()) != m.d + 1) throw DomainError("load_measure_csv: bad row");
    m.points.emplace_back(vals.begin(), vals.end() - 1);
    m.weights.push_back(vals.back());
  }
  return m;
}

}  // namespace curvepat
