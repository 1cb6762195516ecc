#include "curvepat/classify.hpp"

#include <nlohmann/json.hpp>

namespace curvepat {

ThresholdBounds threshold_bounds(int d, unsigned N, unsigned m) {
  if (m < 1 || N < m + static_cast<unsigned>(d) - 1) throw InvalidSubtype();
  ThresholdBounds b;
  Rational first(N, m), second = Rational(d) - Rational((d - 1) * m, N);
  first.canonicalize();
  second.canonicalize();
  b.s_bar = std::min(first, second);
  b.eps_upper = Rational(d - 1, N);
  b.eps_upper.canonicalize();
  b.subtype_m = m;
  b.type_N = N;
  return b;
}

namespace {

// subtype for curves in explicit graph-like form: first component t^m phi(t)
// after recentering, with phi nonvanishing on the recentered interval
std::optional<unsigned> graph_subtype(const CurveSpec& c, const Rational& t0) {
  RatPoly first = c.components.front().taylor_shift(t0);
  auto ord = first.vanishing_order();
  if (!ord || *ord == 0) return std::nullopt;
  RatPoly phi = first;
  for (std::size_t k = 0; k < *ord; ++k) phi = phi.divmod(RatPoly::monomial(1, 1)).first;
  if (phi.is_zero()) return std::nullopt;
  if (phi.degree() >= 1 && sturm_root_count(phi, c.lo - t0, c.hi - t0) > 0) return std::nullopt;
  return static_cast<unsigned>(*ord);
}

}  // namespace

Verdict classify(const CurveSpec& c) {
  Verdict v;
  bool allzero = true;
  for (const RatPoly& p : c.components) allzero = allzero && p.is_zero();
  if (allzero) throw AllZero();
  auto rel = linear_relations(c.components);
  if (rel.rank < c.dim()) {
    v.status = Verdict::Status::Avoidable;
    v.certificate = Verdict::Certificate::Dependence;
    if (!rel.nullspace_basis.empty()) v.dependence_u = rel.nullspace_basis.front();
    return v;
  }
  auto zeros = find_common_zeros(c);  // propagates AllZero
  if (zeros.empty()) {
    v.status = Verdict::Status::Avoidable;
    v.certificate = Verdict::Certificate::NoCommonZero;
    v.gcd_witness = poly_gcd(c.components);
    return v;
  }
  v.status = Verdict::Status::Unavoidable;
  v.certificate = Verdict::Certificate::CommonZero;
  RatPoly g = poly_gcd(c.components);
  std::optional<unsigned> best_type;
  std::optional<RootLoc> best_zero;
  for (const RootLoc& z : zeros) {
    auto N = z.exact ? type_at(c, z.value) : type_at(c, g, z);
    if (!N) continue;  // cannot happen when rank = d, kept defensive
    if (!best_type || *N < *best_type) {
      best_type = N;
      best_zero = z;
    }
  }
  v.zero = best_zero ? best_zero : std::optional<RootLoc>(zeros.front());
  v.type_N = best_type;
  if (best_type && v.zero->exact) {
    v.standard_form = standardize(c, v.zero->value, *best_type);
    auto m = graph_subtype(c, v.zero->value);
    if (m && *best_type >= *m + static_cast<unsigned>(c.dim()) - 1)
      v.bounds = threshold_bounds(c.dim(), *best_type, *m);
  }
  return v;
}

std::string verdict_to_json(const Verdict& v) {
  nlohmann::json j;
  j["status"] = v.status == Verdict::Status::Unavoidable ? "Unavoidable" : "Avoidable";
  switch (v.certificate) {
    case Verdict::Certificate::CommonZero: j["certificate"] = "CommonZero"; break;
    case Verdict::Certificate::Dependence: {
      j["certificate"] = "Dependence";
      std::vector<std::string> u;
      for (const Rational& q : v.dependence_u) u.push_back(q.get_str());
      j["u"] = u;
      break;
    }
    case Verdict::Certificate::NoCommonZero:
      j["certificate"] = "NoCommonZero";
      j["gcd_witness"] = v.gcd_witness.render();
      break;
  }
  if (v.type_N) j["type_N"] = *v.type_N;
  if (v.zero) {
    if (v.zero->exact)
      j["zero"] = v.zero->value.get_str();
    else
      j["zero"] = {v.zero->lo.get_str(), v.zero->hi.get_str()};
  }
  if (v.bounds) {
    j["s_bar"] = v.bounds->s_bar.get_str();
    j["eps_upper"] = v.bounds->eps_upper.get_str();
    j["subtype_m"] = v.bounds->subtype_m;
  }
  if (v.standard_form) j["standard_form"] = nlohmann::json::parse(curve_std_to_json(*v.standard_form));
  return j.dump();
}

HyperplaneResult hyperplane_test(const CurveSpec& c, bool affine) {
  std::vector<RatPoly> ps = c.components;
  if (affine) ps.push_back(RatPoly::constant(1));
  auto rel = linear_relations(ps);
  HyperplaneResult r;
  for (const auto& u : rel.nullspace_basis) {
    // a valid normal must have a nonzero coordinate among the components
    bool nontrivial = false;
    for (std::size_t i = 0; i < c.components.size(); ++i) nontrivial = nontrivial || u[i] != 0;
    if (nontrivial) {
      r.contained = true;
      r.u = u;
      break;
    }
  }
  return r;
}

}  // namespace curvepat
