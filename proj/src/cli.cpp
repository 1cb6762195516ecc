#include "curvepat/cli.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "curvepat/boxes.hpp"
#include "curvepat/classify.hpp"
#include "curvepat/constants.hpp"
#include "curvepat/curve.hpp"
#include "curvepat/fbm.hpp"
#include "curvepat/measures.hpp"

namespace curvepat::cli {

namespace {

using nlohmann::json;

const char* kVersion = "1.0.0";

std::string fnv_digest(const std::string& text) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  std::ostringstream os;
  os << std::hex << h;
  return os.str();
}

std::string slurp(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DomainError("cannot open " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

Rational parse_rat(const std::string& text) {
  mpq_class q(text);
  q.canonicalize();
  return q;
}

struct Report {
  json j;
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

  explicit Report(const std::string& command, const std::string& profile = "demo") {
    j["command"] = command;
    j["tool_version"] = kVersion;
    j["profile"] = profile;
    j["audit"] = json::array();
    j["series"] = {{"columns", json::array()}, {"rows", json::array()}};
  }
  void digest(const std::string& text) { j["inputs_digest"] = fnv_digest(text); }
  void audit(const std::string& name, double margin, bool satisfied, double tol) {
    j["audit"].push_back(
        {{"name", name}, {"margin", margin}, {"satisfied", satisfied}, {"tolerance", tol}});
  }
  void series(std::vector<std::string> cols) { j["series"]["columns"] = cols; }
  void row(std::vector<double> vals) { j["series"]["rows"].push_back(vals); }
  int finish(std::ostream& out) {
    j["timing_ms"] = std::chrono::duration_cast<std::chrono::milliseconds>(
                         std::chrono::steady_clock::now() - start)
                         .count();
    bool ok = true;
    for (const auto& e : j["audit"]) ok = ok && e["satisfied"].get<bool>();
    out << j.dump(2) << "\n";
    return ok ? 0 : 2;
  }
};

std::vector<std::vector<double>> radial_grid(int d, double ximax) {
  std::vector<std::vector<double>> dirs;
  for (int i = 0; i < d; ++i) {
    std::vector<double> e(static_cast<size_t>(d), 0.0);
    e[static_cast<size_t>(i)] = 1.0;
    dirs.push_back(e);
    e[static_cast<size_t>(i)] = -1.0;
    dirs.push_back(e);
  }
  std::vector<double> diag(static_cast<size_t>(d), 1.0 / std::sqrt(static_cast<double>(d)));
  dirs.push_back(diag);
  if (d >= 2) {
    std::vector<double> skew(static_cast<size_t>(d), 0.0);
    skew[0] = 1.0 / std::sqrt(5.0);
    skew[1] = 2.0 / std::sqrt(5.0);
    dirs.push_back(skew);
    std::swap(skew[0], skew[1]);
    skew[1] = -skew[1];
    dirs.push_back(skew);
  }
  std::vector<std::vector<double>> grid;
  for (double R = 1.0; R <= ximax; R *= 2.0)
    for (const auto& u : dirs) {
      std::vector<double> xi(u.size());
      for (size_t i = 0; i < u.size(); ++i) xi[i] = R * u[i];
      grid.push_back(xi);
    }
  return grid;
}

CurveStd standard_from_spec(const CurveSpec& spec, const Rational& t0) {
  auto N = type_at(spec, t0);
  if (!N) throw DomainError("curve has no finite type at the requested point");
  return standardize(spec, t0, *N);
}

double norm2(const std::vector<double>& v) {
  double r = 0;
  for (double x : v) r += x * x;
  return std::sqrt(r);
}

int run_impl(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"curvetool: two-point pattern machinery for polynomial curves"};
  app.require_subcommand(1);

  std::string spec_path, boxes_path, out_prefix, profile = "demo", u_text, t0_text = "0",
              c_text = "1/100", s_text = "1";
  double ximax = 1e4, r_cap = 0.05, tol = 1e-3, fs = 1.5;
  int d = 2, grid_side = 16, n_quad = 512, n = 1 << 14, T = 2;
  unsigned N = 2;
  long j_scale = std::numeric_limits<long>::min();
  std::uint64_t seed = 0;
  auto add_seed = [&](CLI::App* sc) {
    sc->add_option("--seed", seed, "RNG seed (mandatory for stochastic runs)")->required();
  };

  auto* sc_classify = app.add_subcommand("classify", "exact unavoidable/avoidable verdict");
  sc_classify->add_option("--spec", spec_path)->required();

  auto* sc_std = app.add_subcommand("standardize", "standard form at a base point");
  sc_std->add_option("--spec", spec_path)->required();
  sc_std->add_option("--t0", t0_text);

  auto* sc_const = app.add_subcommand("constants", "threshold constant chain");
  sc_const->add_option("--d", d);
  sc_const->add_option("--N", N);
  sc_const->add_option("--profile", profile)->check(CLI::IsMember({"rigorous", "demo"}));

  auto* sc_decay = app.add_subcommand("verify-decay", "Fourier decay ratio sweep");
  sc_decay->add_option("--spec", spec_path)->required();
  sc_decay->add_option("--ximax", ximax);
  sc_decay->add_option("--c", c_text);
  sc_decay->add_option("--profile", profile)->check(CLI::IsMember({"rigorous", "demo"}));

  auto* sc_ball = app.add_subcommand("verify-ball", "ball mass lower bound sweep");
  sc_ball->add_option("--spec", spec_path)->required();

  auto* sc_cfg = app.add_subcommand("config-integral", "configuration integral along deltas");
  sc_cfg->add_option("--spec", spec_path)->required();
  sc_cfg->add_option("--grid", grid_side);
  sc_cfg->add_option("--c", c_text);
  sc_cfg->add_option("--nquad", n_quad);

  auto* sc_content = app.add_subcommand("content", "anisotropic Hausdorff content");
  sc_content->add_option("--boxes", boxes_path)->required();
  sc_content->add_option("--s", s_text)->required();

  auto* sc_frost = app.add_subcommand("frostman", "Frostman certificate for a box set");
  sc_frost->add_option("--boxes", boxes_path)->required();
  sc_frost->add_option("--s", s_text)->required();

  auto* sc_pipe = app.add_subcommand("pipeline", "measure construction pipeline");
  sc_pipe->add_option("--boxes", boxes_path)->required();
  sc_pipe->add_option("--s", s_text)->required();
  sc_pipe->add_option("--spec", spec_path)->required();
  sc_pipe->add_option("--T", T);

  auto* sc_fbm = app.add_subcommand("fbm", "fractional Brownian graph sample");
  sc_fbm->add_option("--s", fs);
  sc_fbm->add_option("--d", d);
  sc_fbm->add_option("--n", n);
  sc_fbm->add_option("--out", out_prefix);
  add_seed(sc_fbm);

  auto* sc_avoid = app.add_subcommand("avoid", "avoidance experiment / certificate");
  sc_avoid->add_option("--spec", spec_path)->required();
  sc_avoid->add_option("--u", u_text, "rational direction a,b,... for exact mode");
  sc_avoid->add_option("--s", fs);
  sc_avoid->add_option("--n", n);
  sc_avoid->add_option("--r", r_cap);
  sc_avoid->add_option("--tol", tol);
  sc_avoid->add_option("--seed", seed);

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n" << app.help();
    return 1;
  }

  if (sc_classify->parsed()) {
    std::string text = slurp(spec_path);
    Report rep("classify");
    rep.digest(text);
    Verdict v = classify(load_curve_spec(text));
    rep.j["outputs"] = json::parse(verdict_to_json(v));
    return rep.finish(out);
  }

  if (sc_std->parsed()) {
    std::string text = slurp(spec_path);
    Report rep("standardize");
    rep.digest(text);
    CurveStd s = standard_from_spec(load_curve_spec(text), parse_rat(t0_text));
    rep.j["outputs"] = json::parse(curve_std_to_json(s));
    return rep.finish(out);
  }

  if (sc_const->parsed()) {
    Report rep("constants", profile);
    rep.digest(std::to_string(d) + ":" + std::to_string(N) + ":" + profile);
    ConstantBundle b = compute_bundle(d, N, profile, ConstantsConfig{});
    rep.j["outputs"] = json::parse(bundle_to_json(b));
    for (const auto& e : b.audit)
      rep.audit(e.name, e.margin_log2.convert_to<double>(), e.satisfied, 0.0);
    return rep.finish(out);
  }

  if (sc_decay->parsed()) {
    std::string text = slurp(spec_path);
    Report rep("verify-decay", profile);
    rep.digest(text);
    CurveSpec spec = load_curve_spec(text);
    CurveStd curve = standard_from_spec(spec, Rational(0));
    ConstantBundle b = compute_bundle(static_cast<int>(spec.components.size()), curve.type_N,
                                      profile, ConstantsConfig{});
    long j = std::max(min_scale_J(curve), curve.safe_scale_J0);
    Rational c = parse_rat(c_text);
    double L = b.L_N.convert_to<double>();
    double max_ratio = 0;
    rep.series({"xi_norm", "ratio"});
    for (const auto& xi : radial_grid(static_cast<int>(spec.components.size()), ximax)) {
      double mod = std::abs(pi_hat(curve, j, c, xi));
      double ratio = mod * std::pow(1.0 + norm2(xi), 1.0 / curve.type_N);
      max_ratio = std::max(max_ratio, ratio);
      rep.row({norm2(xi), ratio});
    }
    rep.j["outputs"] = {{"max_ratio", max_ratio}, {"L_N", L}, {"j", j}};
    rep.audit("decay ratio <= L_N", L - max_ratio, max_ratio <= L, 0.0);
    return rep.finish(out);
  }

  if (sc_ball->parsed()) {
    std::string text = slurp(spec_path);
    Report rep("verify-ball");
    rep.digest(text);
    CurveStd curve = standard_from_spec(load_curve_spec(text), Rational(0));
    int dd = static_cast<int>(curve.components.size());
    long L = 2L * dd * mpz_class(curve.K_N()).get_si();
    rep.series({"r", "mass", "bound"});
    bool all_ok = true;
    double worst = std::numeric_limits<double>::infinity();
    for (int k = 0; k <= 5; ++k) {
      Rational r(1, 1L << k);
      CurveMeasureParams p;
      p.curve = curve;
      p.j = curve.safe_scale_J0;
      p.c = r / (2 * L);
      p.n_quad = 2048;
      double mass = ball_mass(curve_measure(p), std::vector<double>(static_cast<size_t>(dd), 0.0),
                              r.get_d());
      double bound = r.get_d() / static_cast<double>(L);
      all_ok = all_ok && mass >= bound;
      worst = std::min(worst, mass - bound);
      rep.row({r.get_d(), mass, bound});
    }
    rep.j["outputs"] = {{"L", L}};
    rep.audit("ball mass >= r / L_N", worst, all_ok, 0.0);
    return rep.finish(out);
  }

  if (sc_cfg->parsed()) {
    std::string text = slurp(spec_path);
    Report rep("config-integral");
    rep.digest(text);
    CurveStd curve = standard_from_spec(load_curve_spec(text), Rational(0));
    DiscreteMeasure mu = uniform_grid_measure(static_cast<int>(curve.components.size()), grid_side);
    CurveMeasureParams p;
    p.curve = curve;
    p.j = std::max(curve.safe_scale_J0, j_scale);
    p.c = parse_rat(c_text);
    p.n_quad = n_quad;
    ConfigIntegralResult res = configuration_integral(mu, curve_measure(p), default_delta_seq());
    rep.series({"delta", "value", "running_min"});
    double running = std::numeric_limits<double>::infinity();
    for (size_t k = 0; k < res.deltas.size(); ++k) {
      running = std::min(running, std::abs(res.values[k]));
      rep.row({res.deltas[k], res.values[k], running});
    }
    rep.j["outputs"] = {{"liminf_proxy", res.liminf_proxy}};
    rep.audit("liminf proxy positive", res.liminf_proxy, res.liminf_proxy > 0, 0.0);
    return rep.finish(out);
  }

  if (sc_content->parsed() || sc_frost->parsed()) {
    std::string text = slurp(boxes_path);
    std::istringstream is(text);
    BoxSet K = BoxSet::load(is);
    Rational s = parse_rat(s_text);
    if (sc_content->parsed()) {
      Report rep("content");
      rep.digest(text);
      Alg2 c = content(K, s);
      rep.j["outputs"] = {{"content", c.str()}, {"content_double", c.to_double()}};
      return rep.finish(out);
    }
    Report rep("frostman");
    rep.digest(text);
    FrostmanCertificate cert = frostman(K, s);
    rep.j["outputs"] = json::parse(frostman_to_json(cert));
    rep.audit("theta(Q) <= ell(Q)^s", 1.0 - cert.max_ratio.to_double(),
              cert.max_ratio <= Alg2(1, cert.max_ratio.q()), 0.0);
    rep.audit("total mass >= content", cert.total_mass.to_double() - cert.content_lb.to_double(),
              cert.total_mass >= cert.content_lb.promoted(cert.total_mass.q()), 0.0);
    return rep.finish(out);
  }

  if (sc_pipe->parsed()) {
    std::string btext = slurp(boxes_path);
    std::string ctext = slurp(spec_path);
    Report rep("pipeline");
    rep.digest(btext + ctext);
    std::istringstream is(btext);
    BoxSet K = BoxSet::load(is);
    CurveStd curve = standard_from_spec(load_curve_spec(ctext), Rational(0));
    ConstantsConfig cfg;
    cfg.demo_T = T;
    ConstantBundle b = compute_bundle(K.dim(), curve.type_N, "demo", cfg);
    PipelineResult res = build_pipeline_measure(K, parse_rat(s_text), b, curve);
    rep.j["outputs"] = json::parse(pipeline_to_json(res));
    rep.audit("nu mass == ell(Q)^s", res.mass_exact ? 0.0 : -1.0, res.mass_exact, 0.0);
    rep.audit("dyadic Frostman ratio <= 4", 4.0 - res.max_frostman_ratio.to_double(),
              res.frostman_ok, 0.0);
    rep.audit("equality at generation T", res.gen_T_exact ? 0.0 : -1.0, res.gen_T_exact, 0.0);
    rep.audit("spectral proxy within budget", res.spectral_budget - res.spectral_mass,
              res.spectral_ok, 0.0);
    return rep.finish(out);
  }

  if (sc_fbm->parsed()) {
    Report rep("fbm");
    rep.digest(std::to_string(fs) + ":" + std::to_string(d) + ":" + std::to_string(n) + ":" +
               std::to_string(seed));
    FbmGraphSample g = fbm_graph(fs, d, n, seed);
    rep.j["outputs"] = {{"s", g.s},         {"d", g.d},       {"gamma", g.gamma},
                        {"hurst", g.hurst}, {"seed", g.seed}, {"n", g.t_grid.size()}};
    if (!out_prefix.empty()) {
      std::ofstream data(out_prefix + ".bin", std::ios::binary);
      std::ofstream side(out_prefix + ".json");
      save_fbm(g, data, side);
      rep.j["outputs"]["files"] = {out_prefix + ".bin", out_prefix + ".json"};
    }
    return rep.finish(out);
  }

  if (sc_avoid->parsed()) {
    std::string text = slurp(spec_path);
    CurveSpec spec = load_curve_spec(text);
    if (!u_text.empty()) {
      Report rep("avoid");
      rep.digest(text + u_text);
      std::vector<Rational> u;
      std::istringstream us(u_text);
      std::string tok;
      while (std::getline(us, tok, ',')) u.push_back(parse_rat(tok));
      AvoidanceReport res = avoidance_experiment(spec, u);
      rep.j["outputs"] = json::parse(avoidance_to_json(res));
      rep.audit("certified avoidance", res.certified ? 1.0 : -1.0, res.certified, 0.0);
      return rep.finish(out);
    }
    if (!sc_avoid->count("--seed")) {
      err << "avoid: sampled mode requires --seed\n";
      return 1;
    }
    Report rep("avoid");
    rep.digest(text + std::to_string(seed));
    FbmGraphSample g = fbm_graph(fs, static_cast<int>(spec.components.size()), n, seed);
    std::vector<std::vector<double>> samples;
    double lo = std::max(spec.lo.get_d(), 1e-3), hi = spec.hi.get_d();
    for (int k = 0; k < 200; ++k) {
      double t = lo + (hi - lo) * k / 199.0;
      std::vector<double> pt;
      for (const auto& comp : spec.components) pt.push_back(comp.eval_double(t));
      samples.push_back(pt);
    }
    std::vector<double> u(spec.components.size(), 0.0);
    u.back() = 1.0;
    AvoidanceReport res = avoidance_experiment(samples, g, u, r_cap, tol);
    rep.j["outputs"] = json::parse(avoidance_to_json(res));
    rep.audit("positive separation", res.separation - tol, res.separation > tol, tol);
    return rep.finish(out);
  }

  err << "no subcommand handled\n";
  return 1;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  try {
    return run_impl(args, out, err);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

std::string emit_plotdata(const std::string& report_json) {
  json j = json::parse(report_json);
  if (!j.contains("series")) return "";
  std::ostringstream os;
  os.precision(17);
  const auto& cols = j["series"]["columns"];
  for (size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i].get<std::string>();
  os << "\n";
  for (const auto& row : j["series"]["rows"]) {
    for (size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << row[i].get<double>();
    os << "\n";
  }
  return os.str();
}

}  // namespace curvepat::cli
