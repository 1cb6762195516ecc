#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <functional>
#include <map>
#include <random>
#include <sstream>

#include "curvepat/boxes.hpp"
#include "curvepat/constants.hpp"
#include "curvepat/curve.hpp"

using namespace curvepat;

namespace {

BoxSet full_boxset(const std::vector<long>& n_vec, long depth) {
  BoxSet E(n_vec, depth);
  std::vector<long> counts(n_vec.size());
  for (size_t i = 0; i < n_vec.size(); ++i) counts[i] = 1L << (n_vec[i] * depth);
  std::vector<long> a(n_vec.size(), 0);
  while (true) {
    E.insert(a);
    size_t c = 0;
    while (c < a.size() && ++a[c] == counts[c]) a[c++] = 0;
    if (c == a.size()) break;
  }
  return E;
}

BoxSet random_boxset(const std::vector<long>& n_vec, long depth, int leaves, std::mt19937& rng) {
  BoxSet E(n_vec, depth);
  std::vector<long> a(n_vec.size());
  for (int k = 0; k < leaves; ++k) {
    for (size_t i = 0; i < n_vec.size(); ++i) {
      std::uniform_int_distribution<long> pick(0, (1L << (n_vec[i] * depth)) - 1);
      a[i] = pick(rng);
    }
    E.insert(a);
  }
  return E;
}

// digit-restricted product Cantor set: in dimension i only base-2^{n_i}
// digits from allowed[i] appear, at every generation up to `depth`
BoxSet cantor_product(const std::vector<long>& n_vec, const std::vector<std::vector<long>>& allowed,
                      long depth) {
  BoxSet E(n_vec, depth);
  std::vector<long> a(n_vec.size(), 0);
  std::function<void(long)> rec = [&](long gen) {
    if (gen == depth) {
      E.insert(a);
      return;
    }
    std::vector<long> save = a;
    std::vector<size_t> pick(n_vec.size(), 0);
    while (true) {
      for (size_t i = 0; i < n_vec.size(); ++i) a[i] = (save[i] << n_vec[i]) + allowed[i][pick[i]];
      rec(gen + 1);
      size_t c = 0;
      while (c < pick.size() && ++pick[c] == allowed[c].size()) pick[c++] = 0;
      if (c == pick.size()) break;
    }
    a = save;
  };
  rec(0);
  return E;
}

// independent oracle for the content DP: enumerate every tree cover of a
// depth-2 set explicitly (each nonempty generation-1 box is covered either
// by itself or by its leaves; the root may cover everything)
Alg2 cover_oracle_depth2(const BoxSet& E, const Rational& s) {
  Rational sc = s;
  sc.canonicalize();
  long q = sc.get_den().get_si();
  if (E.empty()) return Alg2(0L, q);
  Alg2 ell1 = Alg2::pow2(Rational(-1) * sc, q);
  Alg2 ell2 = Alg2::pow2(Rational(-2) * sc, q);
  // leaves per generation-1 child
  std::map<long, long> leaves_per_child;
  for (const auto& leaf : E.leaves()) {
    std::vector<long> parent_anchor(leaf.anchor.size());
    for (size_t i = 0; i < leaf.anchor.size(); ++i) parent_anchor[i] = leaf.anchor[i] >> E.n_vec()[i];
    long key = 0;
    for (size_t i = 0; i < parent_anchor.size(); ++i) key = key * 1000 + parent_anchor[i];
    leaves_per_child[key]++;
  }
  std::vector<long> counts;
  for (const auto& [k, v] : leaves_per_child) {
    (void)k;
    counts.push_back(v);
  }
  const size_t nc = counts.size();
  REQUIRE(nc <= 16);
  Alg2 best(1L, q);  // the root covers E at cost 1
  for (unsigned long mask = 0; mask < (1UL << nc); ++mask) {
    Alg2 cost(0L, q);
    for (size_t i = 0; i < nc; ++i) {
      if (mask & (1UL << i))
        cost += Alg2(Rational(counts[i]), q) * ell2;
      else
        cost += ell1;
    }
    best = min(best, cost);
  }
  return best;
}

double euclid(const std::vector<double>& a, const std::vector<double>& b) {
  double r2 = 0;
  for (size_t i = 0; i < a.size(); ++i) r2 += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(r2);
}

}  // namespace

TEST_CASE("Alg2 exact arithmetic in Q(2^{-1/q})") {
  Alg2 r = Alg2::pow2(Rational(-3, 2));
  CHECK(r.q() == 2);
  CHECK((r * r).is_rational());
  CHECK((r * r).as_rational() == Rational(1, 8));
  CHECK(r.sign() == 1);
  CHECK((r - r).sign() == 0);

  // inverse against multiplication, across a few q
  std::mt19937 rng(7);
  std::uniform_int_distribution<long> coeff(-6, 6);
  for (int trial = 0; trial < 60; ++trial) {
    long q = 1 + trial % 5;
    Alg2 x(q);
    Alg2 acc(0L, q);
    bool zero = true;
    for (long i = 0; i < q; ++i) {
      long c = coeff(rng);
      if (c != 0) zero = false;
      acc += Alg2(Rational(c), q) * Alg2::pow2(Rational(-i, q), q);
    }
    if (zero) continue;
    Alg2 prod = acc * acc.inverse();
    CHECK(prod.is_rational());
    CHECK(prod.as_rational() == 1);
  }

  // ordering agrees with double evaluation when safely separated
  Alg2 a = Alg2::pow2(Rational(-1, 3));
  Alg2 b(Rational(4, 5), 3);
  CHECK(a < Alg2(Rational(1), 3));
  CHECK(a < b);                        // 2^{-1/3} = 0.7937... < 4/5
  CHECK(a > Alg2(Rational(79, 100), 3));
}

TEST_CASE("box navigation") {
  // n = (1,3), Q = [1/2,1) x [1/4,3/8)
  DyadicBox Q{{1, 3}, 1, {1, 2}};
  CHECK(Q.side(0) == Rational(1, 2));
  CHECK(Q.side(1) == Rational(1, 8));
  CHECK(Q.lo(1) == Rational(1, 4));
  CHECK(Q.ell() == Rational(1, 2));
  auto y = rescale_to_unit(Q, {Rational(3, 4), Rational(5, 16)});
  CHECK(y[0] == Rational(1, 2));
  CHECK(y[1] == Rational(1, 2));

  DyadicBox R{{1, 2}, 2, {1, 5}};
  CHECK(child_boxes(R).size() == 8);
  CHECK(parent_box(R).anchor == std::vector<long>{0, 1});

  std::mt19937 rng(3);
  std::uniform_int_distribution<int> num(0, 63);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Rational> p{Rational(num(rng)) / 64, Rational(num(rng)) / 64};
    auto back = rescale_from_unit(R, rescale_to_unit(R, p));
    CHECK(back == p);
    DyadicBox L = locate_box(p, {1, 2}, 2);
    CHECK(L.contains(p));
  }
}

TEST_CASE("content: examples and exact DP") {
  std::vector<long> n{1, 2};
  BoxSet one(n, 1);
  one.insert({0, 1});
  CHECK(content(one, 1) == Alg2(Rational(1, 2), 1));

  BoxSet full = full_boxset(n, 1);
  CHECK(full.leaf_count() == 8);
  CHECK(content(full, 3) == Alg2(Rational(1), 1));

  BoxSet none(n, 2);
  CHECK(content(none, Rational(3, 2)).is_zero());
}

TEST_CASE("content equals brute-force cover minimum at depth 2") {
  std::mt19937 rng(11);
  std::vector<std::vector<long>> nvs{{1, 1}, {1, 2}, {2, 3}};
  std::vector<Rational> svals{Rational(1), Rational(3, 2), Rational(2), Rational(5, 4)};
  for (const auto& n : nvs) {
    for (int trial = 0; trial < 25; ++trial) {
      BoxSet E = random_boxset(n, 2, 1 + trial % 9, rng);
      for (const auto& s : svals) {
        Alg2 dp = content(E, s);
        Alg2 oracle = cover_oracle_depth2(E, s);
        CHECK(dp == oracle);
      }
    }
  }
}

TEST_CASE("content monotone in the set and in the exponent") {
  std::mt19937 rng(29);
  std::vector<long> n{1, 2};
  for (int trial = 0; trial < 20; ++trial) {
    BoxSet E1 = random_boxset(n, 3, 5, rng);
    BoxSet E2(n, 3);
    for (const auto& Q : E1.leaves()) E2.insert(Q.anchor);
    BoxSet extra = random_boxset(n, 3, 7, rng);
    for (const auto& Q : extra.leaves()) E2.insert(Q.anchor);
    CHECK(content(E1, Rational(3, 2)) <= content(E2, Rational(3, 2)));
    CHECK(content(E2, 2) <= content(E2, 1));
    CHECK(content(E2, Rational(7, 4)) <= content(E2, Rational(3, 2)));
  }
}

TEST_CASE("frostman certificate: examples and DP comparison") {
  std::vector<long> n{1, 2};

  BoxSet full = full_boxset(n, 1);
  auto cf = frostman(full, 2);
  CHECK(cf.total_mass == Alg2(Rational(1), 1));  // cap at the root binds for s <= S

  BoxSet single(n, 2);
  single.insert({2, 9});
  auto cs = frostman(single, Rational(3, 2));
  CHECK(cs.total_mass == Alg2::pow2(Rational(-3)));  // 2^{-2s}
  CHECK(cs.total_mass == content(single, Rational(3, 2)));
  CHECK(cs.max_ratio == Alg2(Rational(1), 1));

  CHECK_THROWS_AS(frostman(BoxSet(n, 2), 1), EmptySet);

  std::mt19937 rng(101);
  for (int trial = 0; trial < 200; ++trial) {
    long depth = 1 + trial % 3;
    BoxSet E = random_boxset(n, depth, 1 + trial % 11, rng);
    Rational s = trial % 2 ? Rational(3, 2) : Rational(2);
    auto cert = frostman(E, s);
    CHECK(cert.total_mass >= cert.content_lb);
    CHECK(cert.content_lb == content(E, s));
    CHECK(cert.max_ratio <= Alg2(Rational(1), 1));
    CHECK(cert.box_masses.size() == E.leaf_count());
    double wsum = 0;
    for (double w : cert.measure.weights) wsum += w;
    CHECK(wsum == doctest::Approx(cert.total_mass.to_double()).epsilon(1e-12));
  }
}

TEST_CASE("energy: atoms, grid oracle, Whitney organization") {
  DiscreteMeasure two;
  two.d = 2;
  two.points = {{0.0, 0.0}, {1.0, 0.0}};
  two.weights = {0.5, 0.5};
  CHECK(energy(two, 1.0).value == doctest::Approx(0.5).epsilon(1e-15));

  CHECK_THROWS_AS(energy(two, 2.5), ExponentOutOfRange);
  CHECK_THROWS_AS(energy(two, -0.5), ExponentOutOfRange);

  // 64 x 64 uniform grid vs an inline direct double-sum oracle
  DiscreteMeasure grid;
  grid.d = 2;
  for (int i = 0; i < 64; ++i)
    for (int j = 0; j < 64; ++j) {
      grid.points.push_back({(i + 0.5) / 64.0, (j + 0.5) / 64.0});
      grid.weights.push_back(1.0 / 4096.0);
    }
  long double oracle_acc = 0;  // extended precision so the oracle's own rounding is negligible
  for (size_t a = 0; a < grid.points.size(); ++a)
    for (size_t b = 0; b < grid.points.size(); ++b) {
      if (a == b) continue;
      oracle_acc += static_cast<long double>(grid.weights[a]) * grid.weights[b] /
                    euclid(grid.points[a], grid.points[b]);
    }
  double oracle = static_cast<double>(oracle_acc);
  double got = energy(grid, 1.0).value;
  CHECK(std::abs(got - oracle) <= 1e-12 * oracle);
}

TEST_CASE("energy bound for Frostman measures") {
  // s - sigma - S + d = 1/4 with n = (1,2): s = 2, sigma = 3/4
  std::vector<long> n{1, 2};
  BoxSet E = full_boxset(n, 3);
  auto cert = frostman(E, 2);
  auto res = energy(cert, 0.75);
  CHECK(res.has_bound);
  CHECK(res.bound_ok);
  CHECK(res.value <= res.whitney_bound);
  // the Lemma-style constant E(1/4) * L with E(t) = 6^d/(1 - 2^{-t})
  double Et = std::pow(6.0, 2) / (1.0 - std::pow(2.0, -0.25));
  CHECK(res.value <= Et * res.L);
  CHECK(res.whitney_bound == doctest::Approx(Et * res.L).epsilon(1e-12));

  // the Whitney-organized sum agrees with the flat pairwise-plus-diagonal sum
  auto flat = energy(cert.measure, 0.75);
  CHECK(std::abs(res.value - flat.value) <= 1e-12 * flat.value);
}

TEST_CASE("rho metric and dimension bounds") {
  CHECK(rho_distance({0, 0}, {0.5, 0.125}, {1, 3}) == doctest::Approx(1.0));
  // n = (1,...,1): rho = 2 * sup-norm
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> x{u(rng), u(rng)}, y{u(rng), u(rng)}, z{u(rng), u(rng)};
    double sup = std::max(std::abs(x[0] - y[0]), std::abs(x[1] - y[1]));
    CHECK(rho_distance(x, y, {1, 1}) == doctest::Approx(2.0 * sup));
    for (const std::vector<long>& n : {std::vector<long>{1, 3}, std::vector<long>{2, 2}}) {
      CHECK(rho_distance(x, x, n) == 0.0);
      CHECK(rho_distance(x, y, n) == doctest::Approx(rho_distance(y, x, n)));
      CHECK(rho_distance(x, z, n) <= rho_distance(x, y, n) + rho_distance(y, z, n) + 1e-12);
    }
  }

  BoxSet E({1, 3}, 1);
  E.insert({0, 0});
  auto [lo1, hi1] = anisotropic_dim_bounds(E, 1.5);
  CHECK(lo1 == doctest::Approx(4.0 - 0.5 * 3.0));
  CHECK(hi1 == doctest::Approx(4.0));
  BoxSet F({1, 1}, 1);
  F.insert({0, 0});
  auto [lo2, hi2] = anisotropic_dim_bounds(F, 1.25);
  CHECK(lo2 == doctest::Approx(1.25));
  CHECK(hi2 == doctest::Approx(2.0));
}

TEST_CASE("positivity at Cantor-product truncations") {
  // content(E, s) > 0 for s below S - (d - dim_H E) N, depth-6 truncations
  struct Pick {
    std::vector<long> n;
    std::vector<std::vector<long>> allowed;
    Rational s;
  };
  std::vector<Pick> picks{
      {{1, 1}, {{0, 1}, {0}}, Rational(3, 4)},          // dim_H = 1, bound 1
      {{1, 2}, {{0, 1}, {0, 3}}, Rational(7, 4)},       // dim_H = 3/2, bound 2
      {{2, 3}, {{0, 3}, {1, 6}}, Rational(5, 4)},       // dim_H = 5/6, bound 3/2
  };
  for (const auto& p : picks) {
    BoxSet E = cantor_product(p.n, p.allowed, 6);
    double dimH = 0;
    for (size_t i = 0; i < p.n.size(); ++i)
      dimH += std::log2(static_cast<double>(p.allowed[i].size())) / static_cast<double>(p.n[i]);
    auto [lower, upper] = anisotropic_dim_bounds(E, dimH);
    CHECK(p.s.get_d() < lower + 1e-9);
    (void)upper;
    Alg2 c = content(E, p.s);
    CHECK(c.sign() > 0);
    CHECK(c == Alg2(Rational(1), 1).promoted(c.q()));
  }
}

TEST_CASE("high density box") {
  std::vector<long> n{1, 2};
  BoxSet full = full_boxset(n, 2);
  DyadicBox Q = high_density_box(full, 3, 0);
  CHECK(Q.generation == 0);  // the root already has density 1 at delta = 0

  // Cantor-like: keep 7 of 8 children per generation, depth 4
  BoxSet K(n, 4);
  {
    std::function<void(long, std::vector<long>&)> rec = [&](long gen, std::vector<long>& a) {
      if (gen == 4) {
        K.insert(a);
        return;
      }
      int skipped = 0;
      for (long idx = 0; idx < 8; ++idx) {
        if (idx == 3 && skipped == 0) {
          ++skipped;  // drop one child per box
          continue;
        }
        std::vector<long> na{(a[0] << 1) + (idx & 1), (a[1] << 2) + (idx >> 1)};
        rec(gen + 1, na);
      }
    };
    std::vector<long> a{0, 0};
    rec(0, a);
  }
  CHECK(K.leaf_count() == 7 * 7 * 7 * 7);
  DyadicBox Qc = high_density_box(K, 2, Rational(1, 4));
  BoxSet inQ = K.restricted(Qc);
  Alg2 got = content(inQ, 2);
  Alg2 need = Alg2(Rational(3, 4), 1) * Alg2::pow2(Rational(-2 * Qc.generation));
  CHECK(got >= need);

  CHECK_THROWS_AS(high_density_box(BoxSet(n, 2), 1, 0), NoBox);
}

TEST_CASE("blow_up") {
  DyadicBox Q{{1, 2}, 1, {1, 1}};  // [1/2,1) x [1/4,1/2)

  DiscreteMeasure atom;
  atom.d = 2;
  atom.points = {{0.5, 0.25}, {0.1, 0.9}};
  atom.weights = {0.3, 0.7};
  auto up = blow_up(atom, Q);
  REQUIRE(up.points.size() == 1);
  CHECK(up.points[0][0] == doctest::Approx(0.0));
  CHECK(up.points[0][1] == doctest::Approx(0.0));
  CHECK(up.weights[0] == doctest::Approx(1.0));

  // uniform on Q maps to uniform probability on the unit box
  DiscreteMeasure unif;
  unif.d = 2;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      unif.points.push_back({0.5 + (i + 0.5) / 8.0, 0.25 + (j + 0.5) / 16.0});
      unif.weights.push_back(0.25);  // arbitrary equal weights, not normalized
    }
  auto uup = blow_up(unif, Q);
  CHECK(uup.points.size() == 16);
  CHECK(uup.total_mass() == doctest::Approx(1.0));
  for (const auto& p : uup.points) {
    CHECK(p[0] >= 0.0);
    CHECK(p[0] < 1.0);
    CHECK(p[1] >= 0.0);
    CHECK(p[1] < 1.0);
  }

  DiscreteMeasure off;
  off.d = 2;
  off.points = {{0.1, 0.9}};
  off.weights = {1.0};
  CHECK_THROWS_AS(blow_up(off, Q), ZeroMass);

  // ratio preservation mu(T_Q(Q')) * nu(Q) = nu(Q') on random boxes
  std::mt19937 rng(17);
  std::uniform_real_distribution<double> u(0, 1);
  DiscreteMeasure nu;
  nu.d = 2;
  for (int k = 0; k < 200; ++k) {
    nu.points.push_back({u(rng), u(rng)});
    nu.weights.push_back(u(rng));
  }
  auto mu = blow_up(nu, Q);
  double nuQ = 0;
  for (size_t k = 0; k < nu.points.size(); ++k)
    if (Q.contains(nu.points[k])) nuQ += nu.weights[k];
  for (const DyadicBox& Qp : child_boxes(Q)) {
    double nuQp = 0;
    for (size_t k = 0; k < nu.points.size(); ++k)
      if (Qp.contains(nu.points[k])) nuQp += nu.weights[k];
    // T_Q(Q') is a generation-1 box of the unit square
    DyadicBox img{{1, 2}, 1, {Qp.anchor[0] - 2 * Q.anchor[0], Qp.anchor[1] - 4 * Q.anchor[1]}};
    double muImg = 0;
    for (size_t k = 0; k < mu.points.size(); ++k)
      if (img.contains(mu.points[k])) muImg += mu.weights[k];
    CHECK(muImg * nuQ == doctest::Approx(nuQp).epsilon(1e-10));
  }
}

TEST_CASE("pipeline measure at demo scale") {
  std::vector<long> n{1, 2};
  BoxSet K = full_boxset(n, 3);

  ConstantsConfig cfg;
  cfg.demo_T = 2;
  ConstantBundle bundle = compute_bundle(2, 2, "demo", cfg);

  CurveSpec parabola;
  parabola.components = {parse_poly("t"), parse_poly("t^2")};
  parabola.lo = 0;
  parabola.hi = 1;
  CurveStd curve = standardize(parabola, 0, 2);

  PipelineResult r = build_pipeline_measure(K, 3, bundle, curve);
  CHECK(r.Q.generation == 0);
  CHECK(r.mass_exact);
  CHECK(r.nu_mass == r.ell_Q_s);
  CHECK(r.gen_T_exact);
  CHECK(r.frostman_ok);
  CHECK(r.max_frostman_ratio <= Alg2(Rational(4), 1).promoted(r.max_frostman_ratio.q()));
  CHECK(r.mu.total_mass() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r.nu.total_mass() == doctest::Approx(r.ell_Q_s.to_double()).epsilon(1e-12));
  CHECK(r.spectral_mass >= 0.0);
  CHECK(r.spectral_budget == doctest::Approx(std::pow(4.0, -8.0)));
  if (!r.spectral_ok) {
    bool listed = false;
    for (const auto& v : r.demo_violations)
      if (v.find("spectral") != std::string::npos) listed = true;
    CHECK(listed);
  }
  CHECK(pipeline_to_json(r).find("mass_exact") != std::string::npos);
  CHECK(frostman_to_json(frostman(K, 3)).find("total_mass") != std::string::npos);
}

TEST_CASE("box set save/load round trip") {
  std::mt19937 rng(23);
  BoxSet E = random_boxset({2, 3}, 2, 9, rng);
  std::stringstream ss;
  E.save(ss);
  BoxSet F = BoxSet::load(ss);
  CHECK(F.leaf_count() == E.leaf_count());
  for (const auto& Q : E.leaves()) CHECK(F.contains_leaf(Q.anchor));
  CHECK(content(E, Rational(3, 2)) == content(F, Rational(3, 2)));
}
