#include "curvepat/boxes.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

namespace curvepat {

namespace {

long sum_nvec(const std::vector<long>& n) {
  long s = 0;
  for (long v : n) s += v;
  return s;
}

// child index layout: digit for dim i occupies n_i bits, low dims in low bits
std::vector<long> decode_child(long idx, const std::vector<long>& n_vec) {
  std::vector<long> r(n_vec.size());
  long off = 0;
  for (size_t i = 0; i < n_vec.size(); ++i) {
    r[i] = (idx >> off) & ((1L << n_vec[i]) - 1);
    off += n_vec[i];
  }
  return r;
}

long encode_child(const std::vector<long>& r, const std::vector<long>& n_vec) {
  long idx = 0, off = 0;
  for (size_t i = 0; i < n_vec.size(); ++i) {
    idx |= r[i] << off;
    off += n_vec[i];
  }
  return idx;
}

}  // namespace

long DyadicBox::S() const { return sum_nvec(n_vec); }

long DyadicBox::N() const { return *std::max_element(n_vec.begin(), n_vec.end()); }

Rational DyadicBox::side(int i) const { return pow2q(-n_vec[static_cast<size_t>(i)] * generation); }

Rational DyadicBox::lo(int i) const { return Rational(anchor[static_cast<size_t>(i)]) * side(i); }

Rational DyadicBox::hi(int i) const { return Rational(anchor[static_cast<size_t>(i)] + 1) * side(i); }

Rational DyadicBox::ell() const { return pow2q(-generation); }

std::vector<Rational> DyadicBox::center() const {
  std::vector<Rational> c(n_vec.size());
  for (int i = 0; i < dim(); ++i) c[static_cast<size_t>(i)] = (lo(i) + hi(i)) / 2;
  return c;
}

bool DyadicBox::contains(const std::vector<Rational>& x) const {
  for (int i = 0; i < dim(); ++i) {
    const auto& xi = x[static_cast<size_t>(i)];
    if (xi < lo(i) || xi >= hi(i)) return false;
  }
  return true;
}

bool DyadicBox::contains(const std::vector<double>& x) const {
  for (int i = 0; i < dim(); ++i) {
    double l = lo(i).get_d(), h = hi(i).get_d();
    if (x[static_cast<size_t>(i)] < l || x[static_cast<size_t>(i)] >= h) return false;
  }
  return true;
}

std::string DyadicBox::str() const {
  std::ostringstream os;
  os << "gen " << generation << " ";
  for (int i = 0; i < dim(); ++i)
    os << (i ? " x " : "") << "[" << rat_str(lo(i)) << "," << rat_str(hi(i)) << ")";
  return os.str();
}

bool operator==(const DyadicBox& a, const DyadicBox& b) {
  return a.n_vec == b.n_vec && a.generation == b.generation && a.anchor == b.anchor;
}

DyadicBox locate_box(const std::vector<Rational>& x, const std::vector<long>& n_vec, long j) {
  DyadicBox Q;
  Q.n_vec = n_vec;
  Q.generation = j;
  Q.anchor.resize(n_vec.size());
  for (size_t i = 0; i < n_vec.size(); ++i) {
    Rational scaled = x[i] / pow2q(-n_vec[i] * j);
    Integer fl;
    mpz_fdiv_q(fl.get_mpz_t(), scaled.get_num().get_mpz_t(), scaled.get_den().get_mpz_t());
    if (!fl.fits_slong_p()) throw DomainError("locate_box: anchor overflow");
    Q.anchor[i] = fl.get_si();
  }
  return Q;
}

DyadicBox parent_box(const DyadicBox& Q) {
  if (Q.generation == 0) throw DomainError("parent_box: generation-0 box has no parent here");
  DyadicBox P = Q;
  P.generation = Q.generation - 1;
  for (size_t i = 0; i < Q.n_vec.size(); ++i) {
    long shift = Q.n_vec[i];
    long a = Q.anchor[i];
    P.anchor[i] = a >= 0 ? a >> shift : -((-a + (1L << shift) - 1) >> shift);
  }
  return P;
}

std::vector<DyadicBox> child_boxes(const DyadicBox& Q) {
  long S = Q.S();
  std::vector<DyadicBox> out;
  out.reserve(static_cast<size_t>(1L << S));
  for (long idx = 0; idx < (1L << S); ++idx) {
    DyadicBox C = Q;
    C.generation = Q.generation + 1;
    auto r = decode_child(idx, Q.n_vec);
    for (size_t i = 0; i < Q.n_vec.size(); ++i) C.anchor[i] = (Q.anchor[i] << Q.n_vec[i]) + r[i];
    out.push_back(std::move(C));
  }
  return out;
}

std::vector<Rational> rescale_to_unit(const DyadicBox& Q, const std::vector<Rational>& x) {
  std::vector<Rational> y(x.size());
  for (int i = 0; i < Q.dim(); ++i)
    y[static_cast<size_t>(i)] =
        (x[static_cast<size_t>(i)] - Q.lo(i)) * pow2q(Q.n_vec[static_cast<size_t>(i)] * Q.generation);
  return y;
}

std::vector<Rational> rescale_from_unit(const DyadicBox& Q, const std::vector<Rational>& y) {
  std::vector<Rational> x(y.size());
  for (int i = 0; i < Q.dim(); ++i)
    x[static_cast<size_t>(i)] = Q.lo(i) + y[static_cast<size_t>(i)] * Q.side(i);
  return x;
}

// ---------------------------------------------------------------- BoxSet --

BoxSet::BoxSet(std::vector<long> n_vec, long depth)
    : n_vec_(std::move(n_vec)), depth_(depth), root_(std::make_unique<Node>()) {
  if (n_vec_.empty() || depth_ < 0) throw DomainError("BoxSet: bad parameters");
  for (long v : n_vec_)
    if (v < 1) throw DomainError("BoxSet: n_vec entries must be positive");
}

long BoxSet::S() const { return sum_nvec(n_vec_); }

bool BoxSet::empty() const { return leaf_count_ == 0; }

std::size_t BoxSet::leaf_count() const { return leaf_count_; }

void BoxSet::insert(const std::vector<long>& leaf_anchor) {
  if (static_cast<int>(leaf_anchor.size()) != dim()) throw DomainError("BoxSet::insert: dimension mismatch");
  for (size_t i = 0; i < leaf_anchor.size(); ++i)
    if (leaf_anchor[i] < 0 || leaf_anchor[i] >= (1L << (n_vec_[i] * depth_)))
      throw DomainError("BoxSet::insert: anchor outside the unit box");
  if (depth_ == 0) {
    leaf_count_ = 1;
    return;
  }
  Node* cur = root_.get();
  bool fresh = false;
  for (long t = 1; t <= depth_; ++t) {
    std::vector<long> r(n_vec_.size());
    for (size_t i = 0; i < n_vec_.size(); ++i)
      r[i] = (leaf_anchor[i] >> (n_vec_[i] * (depth_ - t))) & ((1L << n_vec_[i]) - 1);
    long idx = encode_child(r, n_vec_);
    auto& slot = cur->kids[idx];
    if (!slot) {
      slot = std::make_unique<Node>();
      if (t == depth_) fresh = true;
    }
    cur = slot.get();
  }
  if (fresh) ++leaf_count_;
}

void BoxSet::insert(const DyadicBox& Q) {
  if (Q.n_vec != n_vec_ || Q.generation != depth_)
    throw DomainError("BoxSet::insert: box must be a generation-depth box with matching n_vec");
  insert(Q.anchor);
}

bool BoxSet::contains_leaf(const std::vector<long>& leaf_anchor) const {
  const Node* cur = root_.get();
  for (long t = 1; t <= depth_ && cur; ++t) {
    std::vector<long> r(n_vec_.size());
    for (size_t i = 0; i < n_vec_.size(); ++i)
      r[i] = (leaf_anchor[i] >> (n_vec_[i] * (depth_ - t))) & ((1L << n_vec_[i]) - 1);
    auto it = cur->kids.find(encode_child(r, n_vec_));
    cur = it == cur->kids.end() ? nullptr : it->second.get();
  }
  return cur != nullptr;
}

namespace {
void collect_leaves(const BoxSet::Node* node, long gen, long depth, const std::vector<long>& n_vec,
                    std::vector<long>& anchor,
                    const std::function<void(const std::vector<long>&)>& emit) {
  if (gen == depth) {
    emit(anchor);
    return;
  }
  for (const auto& [idx, kid] : node->kids) {
    auto r = decode_child(idx, n_vec);
    std::vector<long> next(anchor.size());
    for (size_t i = 0; i < anchor.size(); ++i) next[i] = (anchor[i] << n_vec[i]) + r[i];
    collect_leaves(kid.get(), gen + 1, depth, n_vec, next, emit);
  }
}
}  // namespace

std::vector<DyadicBox> BoxSet::leaves() const {
  std::vector<DyadicBox> out;
  std::vector<long> a(n_vec_.size(), 0);
  collect_leaves(root_.get(), 0, depth_, n_vec_, a, [&](const std::vector<long>& anchor) {
    DyadicBox Q;
    Q.n_vec = n_vec_;
    Q.generation = depth_;
    Q.anchor = anchor;
    out.push_back(std::move(Q));
  });
  return out;
}

const BoxSet::Node* BoxSet::find(const DyadicBox& Q) const {
  if (Q.n_vec != n_vec_ || Q.generation < 0 || Q.generation > depth_) return nullptr;
  const Node* cur = root_.get();
  for (long t = 1; t <= Q.generation && cur; ++t) {
    std::vector<long> r(n_vec_.size());
    for (size_t i = 0; i < n_vec_.size(); ++i)
      r[i] = (Q.anchor[i] >> (n_vec_[i] * (Q.generation - t))) & ((1L << n_vec_[i]) - 1);
    auto it = cur->kids.find(encode_child(r, n_vec_));
    cur = it == cur->kids.end() ? nullptr : it->second.get();
  }
  return cur;
}

BoxSet BoxSet::restricted(const DyadicBox& Q) const {
  BoxSet out(n_vec_, depth_);
  const Node* node = find(Q);
  if (!node) return out;
  std::vector<long> a = Q.anchor;
  collect_leaves(node, Q.generation, depth_, n_vec_, a,
                 [&](const std::vector<long>& anchor) { out.insert(anchor); });
  return out;
}

BoxSet BoxSet::rescaled(const DyadicBox& Q) const {
  BoxSet out(n_vec_, depth_ - Q.generation);
  const Node* node = find(Q);
  if (!node) return out;
  std::vector<long> a(n_vec_.size(), 0);
  collect_leaves(node, Q.generation, depth_, n_vec_, a,
                 [&](const std::vector<long>& anchor) { out.insert(anchor); });
  return out;
}

void BoxSet::save(std::ostream& os) const {
  os << dim();
  for (long v : n_vec_) os << " " << v;
  os << " " << depth_ << "\n";
  for (const auto& Q : leaves()) {
    for (size_t i = 0; i < Q.anchor.size(); ++i) os << (i ? " " : "") << Q.anchor[i];
    os << "\n";
  }
}

BoxSet BoxSet::load(std::istream& is) {
  int d;
  if (!(is >> d) || d < 1) throw DomainError("BoxSet::load: bad header");
  std::vector<long> n_vec(static_cast<size_t>(d));
  for (auto& v : n_vec)
    if (!(is >> v)) throw DomainError("BoxSet::load: bad header");
  long depth;
  if (!(is >> depth)) throw DomainError("BoxSet::load: bad header");
  BoxSet out(n_vec, depth);
  std::vector<long> a(static_cast<size_t>(d));
  while (is >> a[0]) {
    for (int i = 1; i < d; ++i)
      if (!(is >> a[static_cast<size_t>(i)])) throw DomainError("BoxSet::load: truncated anchor");
    out.insert(a);
  }
  return out;
}

// --------------------------------------------------------------- content --

namespace {

struct ContentCtx {
  const std::vector<long>* n_vec;
  long depth;
  long qden;
  Rational s;
  std::vector<Alg2> ell_s;  // ell(gen)^s = 2^{-gen*s}
};

ContentCtx make_content_ctx(const BoxSet& E, const Rational& s) {
  ContentCtx ctx;
  ctx.n_vec = &E.n_vec();
  ctx.depth = E.depth();
  Rational sc = s;
  sc.canonicalize();
  if (!sc.get_den().fits_slong_p()) throw DomainError("content: exponent denominator too large");
  ctx.qden = sc.get_den().get_si();
  ctx.s = sc;
  ctx.ell_s.reserve(static_cast<size_t>(ctx.depth) + 1);
  for (long g = 0; g <= ctx.depth; ++g)
    ctx.ell_s.push_back(Alg2::pow2(Rational(-g) * sc, ctx.qden));
  return ctx;
}

Alg2 content_rec(const BoxSet::Node* node, long gen, const ContentCtx& ctx) {
  if (gen == ctx.depth) return ctx.ell_s[static_cast<size_t>(gen)];
  Alg2 sum(0L, ctx.qden);
  for (const auto& [idx, kid] : node->kids) {
    (void)idx;
    sum += content_rec(kid.get(), gen + 1, ctx);
  }
  return min(ctx.ell_s[static_cast<size_t>(gen)], sum);
}

}  // namespace

Alg2 content(const BoxSet& E, const Rational& s) {
  auto ctx = make_content_ctx(E, s);
  if (E.empty()) return Alg2(0L, ctx.qden);
  return content_rec(E.root(), 0, ctx);
}

// -------------------------------------------------------------- frostman --

namespace {

// first pass: subtree mass after capping inside the subtree; scale factors
// recorded per node
Alg2 frostman_mass(const BoxSet::Node* node, long gen, const ContentCtx& ctx,
                   std::unordered_map<const BoxSet::Node*, Alg2>& scale) {
  if (gen == ctx.depth) return ctx.ell_s[static_cast<size_t>(gen)];
  Alg2 sum(0L, ctx.qden);
  for (const auto& [idx, kid] : node->kids) {
    (void)idx;
    sum += frostman_mass(kid.get(), gen + 1, ctx, scale);
  }
  const Alg2& cap = ctx.ell_s[static_cast<size_t>(gen)];
  if (sum > cap) {
    scale.emplace(node, cap / sum);
    return cap;
  }
  return sum;
}

// second pass: push accumulated scales down to the leaves, track the maximal
// ratio theta(Q)/ell(Q)^s over all tree boxes
void frostman_emit(const BoxSet::Node* node, long gen, const ContentCtx& ctx,
                   const std::unordered_map<const BoxSet::Node*, Alg2>& scale, const Alg2& acc,
                   std::vector<long>& anchor, Alg2& max_ratio,
                   std::vector<std::pair<std::vector<long>, Alg2>>& out) {
  if (gen == ctx.depth) {
    Alg2 mass = ctx.ell_s[static_cast<size_t>(gen)] * acc;
    Alg2 ratio = mass * ctx.ell_s[static_cast<size_t>(gen)].inverse();
    max_ratio = max(max_ratio, ratio);
    out.emplace_back(anchor, mass);
    return;
  }
  Alg2 next = acc;
  auto it = scale.find(node);
  if (it != scale.end()) next *= it->second;
  for (const auto& [idx, kid] : node->kids) {
    auto r = decode_child(idx, *ctx.n_vec);
    std::vector<long> na(anchor.size());
    for (size_t i = 0; i < anchor.size(); ++i) na[i] = (anchor[i] << (*ctx.n_vec)[i]) + r[i];
    frostman_emit(kid.get(), gen + 1, ctx, scale, next, na, max_ratio, out);
  }
}

// subtree mass of the final measure at every node, for the ratio audit
Alg2 frostman_ratio_audit(const BoxSet::Node* node, long gen, const ContentCtx& ctx,
                          const std::unordered_map<const BoxSet::Node*, Alg2>& scale,
                          const Alg2& acc, Alg2& max_ratio) {
  if (gen == ctx.depth) return ctx.ell_s[static_cast<size_t>(gen)] * acc;
  Alg2 next = acc;
  auto it = scale.find(node);
  if (it != scale.end()) next *= it->second;
  Alg2 sum(0L, ctx.qden);
  for (const auto& [idx, kid] : node->kids) {
    (void)idx;
    sum += frostman_ratio_audit(kid.get(), gen + 1, ctx, scale, next, max_ratio);
  }
  max_ratio = max(max_ratio, sum * ctx.ell_s[static_cast<size_t>(gen)].inverse());
  return sum;
}

}  // namespace

FrostmanCertificate frostman(const BoxSet& E, const Rational& s) {
  if (E.empty()) throw EmptySet("frostman: empty box set");
  auto ctx = make_content_ctx(E, s);
  std::unordered_map<const BoxSet::Node*, Alg2> scale;
  Alg2 total = frostman_mass(E.root(), 0, ctx, scale);

  FrostmanCertificate cert;
  cert.n_vec = E.n_vec();
  cert.depth = E.depth();
  cert.s = ctx.s;
  cert.total_mass = total;
  cert.content_lb = content(E, s);
  cert.max_ratio = Alg2(0L, ctx.qden);

  std::vector<long> a(E.n_vec().size(), 0);
  frostman_emit(E.root(), 0, ctx, scale, Alg2(1L, ctx.qden), a, cert.max_ratio, cert.box_masses);
  frostman_ratio_audit(E.root(), 0, ctx, scale, Alg2(1L, ctx.qden), cert.max_ratio);

  cert.measure.d = E.dim();
  cert.measure.label = "frostman";
  cert.measure.cell_sides.resize(E.n_vec().size());
  for (size_t i = 0; i < E.n_vec().size(); ++i)
    cert.measure.cell_sides[i] = std::pow(2.0, -static_cast<double>(E.n_vec()[i] * E.depth()));
  for (const auto& [anchor, mass] : cert.box_masses) {
    std::vector<double> pt(anchor.size());
    for (size_t i = 0; i < anchor.size(); ++i)
      pt[i] = (static_cast<double>(anchor[i]) + 0.5) * cert.measure.cell_sides[i];
    cert.measure.points.push_back(std::move(pt));
    cert.measure.weights.push_back(mass.to_double());
  }
  return cert;
}

// ---------------------------------------------------------------- energy --

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

// integral over [0, h] of prod_i (h_i - v_i) |v|^{-sigma} dv by dyadic shells
// around the singularity, tensor Gauss-Legendre on each shell piece
double corner_integral(const std::vector<double>& h, double sigma) {
  const int d = static_cast<int>(h.size());
  static thread_local std::vector<double> gx, gw;
  if (gx.empty()) gauss_legendre_unit(20, gx, gw);
  const int n = static_cast<int>(gx.size());

  auto piece = [&](const std::vector<double>& lo, const std::vector<double>& hi) {
    std::vector<int> idx(static_cast<size_t>(d), 0);
    double acc = 0;
    while (true) {
      double wt = 1, r2 = 0;
      double f = 1;
      for (int i = 0; i < d; ++i) {
        double len = hi[static_cast<size_t>(i)] - lo[static_cast<size_t>(i)];
        double v = lo[static_cast<size_t>(i)] + len * gx[static_cast<size_t>(idx[static_cast<size_t>(i)])];
        wt *= len * gw[static_cast<size_t>(idx[static_cast<size_t>(i)])];
        r2 += v * v;
        f *= h[static_cast<size_t>(i)] - v;
      }
      acc += wt * f * std::pow(r2, -sigma / 2);
      int c = 0;
      while (c < d && ++idx[static_cast<size_t>(c)] == n) idx[static_cast<size_t>(c++)] = 0;
      if (c == d) break;
    }
    return acc;
  };

  double total = 0;
  std::vector<double> top = h;
  for (int level = 0; level < 4000; ++level) {
    std::vector<double> half(static_cast<size_t>(d));
    for (int i = 0; i < d; ++i) half[static_cast<size_t>(i)] = top[static_cast<size_t>(i)] / 2;
    double shell = 0;
    for (int mask = 1; mask < (1 << d); ++mask) {
      std::vector<double> lo(static_cast<size_t>(d)), hi(static_cast<size_t>(d));
      for (int i = 0; i < d; ++i) {
        if (mask & (1 << i)) {
          lo[static_cast<size_t>(i)] = half[static_cast<size_t>(i)];
          hi[static_cast<size_t>(i)] = top[static_cast<size_t>(i)];
        } else {
          lo[static_cast<size_t>(i)] = 0;
          hi[static_cast<size_t>(i)] = half[static_cast<size_t>(i)];
        }
      }
      shell += piece(lo, hi);
    }
    total += shell;
    if (shell < 1e-16 * total && level > 4) break;
    top = half;
  }
  return total;
}

double atom_self_energy(double w, const std::vector<double>& cell, double sigma) {
  double vol = 1;
  for (double s : cell) vol *= s;
  double dens = w / vol;
  double I0 = corner_integral(cell, sigma);
  return dens * dens * std::pow(2.0, static_cast<double>(cell.size())) * I0;
}

// compensated accumulation so the Whitney and flat orderings agree to 1e-12
struct KahanAcc {
  double sum = 0, comp = 0;
  void add(double v) {
    double y = v - comp;
    double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
};

double kernel(const std::vector<double>& a, const std::vector<double>& b, double sigma) {
  double r2 = 0;
  for (size_t i = 0; i < a.size(); ++i) r2 += (a[i] - b[i]) * (a[i] - b[i]);
  return std::pow(r2, -sigma / 2);
}

}  // namespace

EnergyResult energy(const DiscreteMeasure& m, double sigma) {
  if (!(sigma > 0) || !(sigma < m.d)) throw ExponentOutOfRange("energy: need 0 < sigma < d");
  EnergyResult res;
  const size_t n = m.points.size();
  KahanAcc off;
  for (size_t a = 0; a < n; ++a)
    for (size_t b = a + 1; b < n; ++b)
      off.add(2.0 * m.weights[a] * m.weights[b] * kernel(m.points[a], m.points[b], sigma));
  if (!m.cell_sides.empty()) {
    double self_unit = atom_self_energy(1.0, m.cell_sides, sigma);
    for (double w : m.weights) off.add(w * w * self_unit);
  }
  res.value = off.sum;
  return res;
}

namespace {

struct WhitneyCtx {
  const std::vector<long>* n_vec;
  long depth;
  double sigma;
  const DiscreteMeasure* m;
  // DFS atom index range per trie node
  std::unordered_map<const BoxSet::Node*, std::pair<size_t, size_t>> range;
};

size_t assign_ranges(const BoxSet::Node* node, long gen, long depth, size_t next,
                     std::unordered_map<const BoxSet::Node*, std::pair<size_t, size_t>>& range) {
  size_t begin = next;
  if (gen == depth) {
    range[node] = {begin, begin + 1};
    return begin + 1;
  }
  for (const auto& [idx, kid] : node->kids) {
    (void)idx;
    next = assign_ranges(kid.get(), gen + 1, depth, next, range);
  }
  range[node] = {begin, next};
  return next;
}

bool boxes_touch(const std::vector<long>& a, const std::vector<long>& b) {
  for (size_t i = 0; i < a.size(); ++i)
    if (std::labs(a[i] - b[i]) > 1) return false;
  return true;
}

void pair_sum(const WhitneyCtx& ctx, const BoxSet::Node* A, const BoxSet::Node* B, KahanAcc& acc) {
  auto [a0, a1] = ctx.range.at(A);
  auto [b0, b1] = ctx.range.at(B);
  for (size_t a = a0; a < a1; ++a)
    for (size_t b = b0; b < b1; ++b)
      acc.add(2.0 * ctx.m->weights[a] * ctx.m->weights[b] *
              kernel(ctx.m->points[a], ctx.m->points[b], ctx.sigma));
}

// Whitney recursion over same-generation box pairs; unordered contributions
void whitney_rec(const WhitneyCtx& ctx, const BoxSet::Node* A, const std::vector<long>& aA,
                 const BoxSet::Node* B, const std::vector<long>& aB, long gen, KahanAcc& acc) {
  if (!boxes_touch(aA, aB)) {
    pair_sum(ctx, A, B, acc);
    return;
  }
  if (gen == ctx.depth) {
    if (A == B) {
      size_t a = ctx.range.at(A).first;
      acc.add(atom_self_energy(ctx.m->weights[a], ctx.m->cell_sides, ctx.sigma));
    } else {
      pair_sum(ctx, A, B, acc);
    }
    return;
  }
  if (A == B) {
    for (auto it1 = A->kids.begin(); it1 != A->kids.end(); ++it1)
      for (auto it2 = it1; it2 != A->kids.end(); ++it2) {
        auto r1 = decode_child(it1->first, *ctx.n_vec);
        auto r2 = decode_child(it2->first, *ctx.n_vec);
        std::vector<long> c1(aA.size()), c2(aA.size());
        for (size_t i = 0; i < aA.size(); ++i) {
          c1[i] = (aA[i] << (*ctx.n_vec)[i]) + r1[i];
          c2[i] = (aA[i] << (*ctx.n_vec)[i]) + r2[i];
        }
        whitney_rec(ctx, it1->second.get(), c1, it2->second.get(), c2, gen + 1, acc);
      }
  } else {
    for (const auto& [i1, k1] : A->kids)
      for (const auto& [i2, k2] : B->kids) {
        auto r1 = decode_child(i1, *ctx.n_vec);
        auto r2 = decode_child(i2, *ctx.n_vec);
        std::vector<long> c1(aA.size()), c2(aB.size());
        for (size_t i = 0; i < aA.size(); ++i) {
          c1[i] = (aA[i] << (*ctx.n_vec)[i]) + r1[i];
          c2[i] = (aB[i] << (*ctx.n_vec)[i]) + r2[i];
        }
        whitney_rec(ctx, k1.get(), c1, k2.get(), c2, gen + 1, acc);
      }
  }
}

}  // namespace

EnergyResult energy(const FrostmanCertificate& cert, double sigma) {
  const int d = static_cast<int>(cert.n_vec.size());
  if (!(sigma > 0) || !(sigma < d)) throw ExponentOutOfRange("energy: need 0 < sigma < d");

  // rebuild the trie in the same DFS order the certificate masses use
  BoxSet E(cert.n_vec, cert.depth);
  for (const auto& [anchor, mass] : cert.box_masses) {
    (void)mass;
    E.insert(anchor);
  }

  WhitneyCtx ctx;
  ctx.n_vec = &cert.n_vec;
  ctx.depth = cert.depth;
  ctx.sigma = sigma;
  ctx.m = &cert.measure;
  assign_ranges(E.root(), 0, cert.depth, 0, ctx.range);

  EnergyResult res;
  std::vector<long> a0(cert.n_vec.size(), 0);
  KahanAcc acc;
  whitney_rec(ctx, E.root(), a0, E.root(), a0, 0, acc);
  res.value = acc.sum;

  res.L = cert.max_ratio.to_double();
  double S = static_cast<double>(sum_nvec(cert.n_vec));
  double s = cert.s.get_d();
  double expo = sigma + S - d - s;
  if (expo < 0) {
    res.has_bound = true;
    res.whitney_bound = std::pow(6.0, d) * res.L / (1.0 - std::pow(2.0, expo));
    res.bound_ok = res.value <= res.whitney_bound;
  }
  return res;
}

// ----------------------------------------------------- metric, dimension --

double rho_distance(const std::vector<double>& x, const std::vector<double>& y,
                    const std::vector<long>& n_vec) {
  double best = 0;
  for (size_t i = 0; i < n_vec.size(); ++i) {
    double v = std::pow(2.0 * std::abs(x[i] - y[i]), 1.0 / static_cast<double>(n_vec[i]));
    best = std::max(best, v);
  }
  return best;
}

std::pair<double, double> anisotropic_dim_bounds(const BoxSet& E, double dim_euclidean) {
  double S = static_cast<double>(E.S());
  double N = static_cast<double>(*std::max_element(E.n_vec().begin(), E.n_vec().end()));
  double d = static_cast<double>(E.dim());
  double lower = S - (d - dim_euclidean) * N;
  return {lower, S};
}

// ------------------------------------------------------ high density box --

namespace {

struct DensityCandidate {
  Alg2 density;
  long generation;
  std::vector<long> anchor;
};

bool candidate_better(const DensityCandidate& a, const DensityCandidate& b) {
  int cmp = (a.density - b.density).sign();
  if (cmp != 0) return cmp > 0;
  if (a.generation != b.generation) return a.generation < b.generation;
  return a.anchor < b.anchor;
}

Alg2 density_scan(const BoxSet::Node* node, long gen, std::vector<long>& anchor,
                  const ContentCtx& ctx, long J_min, long J_max,
                  std::optional<DensityCandidate>& best) {
  Alg2 cost(0L, ctx.qden);
  if (gen == ctx.depth) {
    cost = ctx.ell_s[static_cast<size_t>(gen)];
  } else {
    Alg2 sum(0L, ctx.qden);
    for (const auto& [idx, kid] : node->kids) {
      auto r = decode_child(idx, *ctx.n_vec);
      std::vector<long> na(anchor.size());
      for (size_t i = 0; i < anchor.size(); ++i) na[i] = (anchor[i] << (*ctx.n_vec)[i]) + r[i];
      sum += density_scan(kid.get(), gen + 1, na, ctx, J_min, J_max, best);
    }
    cost = min(ctx.ell_s[static_cast<size_t>(gen)], sum);
  }
  if (gen >= J_min && gen <= J_max) {
    DensityCandidate cand{cost * ctx.ell_s[static_cast<size_t>(gen)].inverse(), gen, anchor};
    if (!best || candidate_better(cand, *best)) best = std::move(cand);
  }
  return cost;
}

DyadicBox high_density_box_impl(const BoxSet& K, const Rational& s, const Rational& delta,
                                long J_min, long J_max) {
  if (K.empty()) throw NoBox("high_density_box: empty set");
  auto ctx = make_content_ctx(K, s);
  std::optional<DensityCandidate> best;
  std::vector<long> a(K.n_vec().size(), 0);
  density_scan(K.root(), 0, a, ctx, J_min, J_max, best);
  if (!best) throw DensityUnmet("high_density_box: no box in the allowed generation range");
  Alg2 need = Alg2(Rational(1) - delta, ctx.qden);
  if (best->density < need)
    throw DensityUnmet("high_density_box: best density " + best->density.str() +
                       " below 1 - delta at the available depth");
  DyadicBox Q;
  Q.n_vec = K.n_vec();
  Q.generation = best->generation;
  Q.anchor = best->anchor;
  return Q;
}

}  // namespace

DyadicBox high_density_box(const BoxSet& K, const Rational& s, const Rational& delta, long J_min) {
  return high_density_box_impl(K, s, delta, J_min, K.depth());
}

// --------------------------------------------------------------- blow_up --

DiscreteMeasure blow_up(const DiscreteMeasure& nu, const DyadicBox& Q) {
  DiscreteMeasure out;
  out.d = nu.d;
  out.label = nu.label;
  std::vector<double> lo(static_cast<size_t>(Q.dim())), scale(static_cast<size_t>(Q.dim()));
  for (int i = 0; i < Q.dim(); ++i) {
    lo[static_cast<size_t>(i)] = Q.lo(i).get_d();
    scale[static_cast<size_t>(i)] = 1.0 / Q.side(i).get_d();
  }
  double mass = 0;
  for (size_t k = 0; k < nu.points.size(); ++k) {
    if (!Q.contains(nu.points[k])) continue;
    std::vector<double> y(nu.points[k].size());
    for (size_t i = 0; i < y.size(); ++i) y[i] = (nu.points[k][i] - lo[i]) * scale[i];
    out.points.push_back(std::move(y));
    out.weights.push_back(nu.weights[k]);
    mass += nu.weights[k];
  }
  if (!(mass > 0)) throw ZeroMass("blow_up: nu(Q) = 0");
  for (auto& w : out.weights) w /= mass;
  if (!nu.cell_sides.empty()) {
    out.cell_sides.resize(nu.cell_sides.size());
    for (size_t i = 0; i < nu.cell_sides.size(); ++i)
      out.cell_sides[i] = nu.cell_sides[i] * scale[i];
  }
  return out;
}

// -------------------------------------------------------------- pipeline --

Rational trapezoid_bump_integral(const Rational& a, const Rational& b, const Rational& delta) {
  // f = 0 on [0,delta], linear up on [delta,2delta], c = (1-2delta)^{-1} on
  // [2delta,1-delta], linear down on [1-delta,1], 0 outside; integral over
  // [0,1] is exactly 1
  Rational c = Rational(1) / (Rational(1) - 2 * delta);
  auto antiderivative = [&](Rational x) -> Rational {
    if (x < 0) x = 0;
    if (x > 1) x = 1;
    Rational F(0);
    // up ramp
    Rational u0 = delta, u1 = 2 * delta;
    if (x > u0) {
      Rational t = std::min(Rational(x), u1) - u0;
      F += c * t * t / (2 * delta);
    }
    // plateau
    Rational p0 = 2 * delta, p1 = Rational(1) - delta;
    if (x > p0) F += c * (std::min(Rational(x), p1) - p0);
    // down ramp: f(x) = c (1 - x)/delta on [1-delta, 1]
    Rational q0 = Rational(1) - delta;
    if (x > q0) {
      Rational t = std::min(Rational(x), Rational(1)) - q0;
      F += c * (t - t * t / (2 * delta));
    }
    return F;
  };
  return antiderivative(b) - antiderivative(a);
}

namespace {

// m_hat(xi) for box-cell atoms: sum m * e^{-2 pi i xi.c} * prod sinc(pi xi h)
std::complex<double> cell_fourier(const std::vector<std::vector<double>>& centers,
                                  const std::vector<double>& weights,
                                  const std::vector<double>& cell, const std::vector<double>& xi) {
  double shape = 1;
  for (size_t i = 0; i < cell.size(); ++i) {
    double a = M_PI * xi[i] * cell[i];
    shape *= std::abs(a) < 1e-12 ? 1.0 : std::sin(a) / a;
  }
  std::complex<double> acc = 0;
  for (size_t k = 0; k < centers.size(); ++k) {
    double phase = 0;
    for (size_t i = 0; i < xi.size(); ++i) phase += centers[k][i] * xi[i];
    acc += weights[k] * std::polar(1.0, -2.0 * M_PI * phase);
  }
  return acc * shape;
}

}  // namespace

PipelineResult build_pipeline_measure(const BoxSet& K, const Rational& s,
                                      const ConstantBundle& bundle, const CurveStd& curve) {
  const int d = K.dim();
  const long S = K.S();
  const long T = static_cast<long>(bundle.T);
  if (bundle.profile != "demo") throw PreconditionError("build_pipeline_measure: demo-profile bundle required");
  if (T < 1 || T > 4 || S * T > 26)
    throw PreconditionError("build_pipeline_measure: T must be in [1,4] with 2^{ST} enumerable");
  if (bundle.d != d) throw PreconditionError("build_pipeline_measure: bundle dimension mismatch");
  if (static_cast<int>(curve.components.size()) != d)
    throw PreconditionError("build_pipeline_measure: curve dimension mismatch");
  if (K.depth() < T) throw PreconditionError("build_pipeline_measure: K must have depth >= T");

  PipelineResult res;
  res.T = T;
  res.delta = pow2q(-(S * T + 2));
  res.Q = high_density_box_impl(K, s, res.delta, 0, K.depth() - T);

  BoxSet Krs = K.rescaled(res.Q);
  const long Jp = Krs.depth();  // >= T
  auto ctx = make_content_ctx(Krs, s);
  const long qden = ctx.qden;
  res.ell_Q_s = Alg2::pow2(Rational(-res.Q.generation) * ctx.s, qden);

  const Rational delta_b = pow2q(bundle.bump.delta_log2);

  // exact leaf masses of mu, keyed by leaf anchor
  std::map<std::vector<long>, Alg2> mu_mass;
  // exact bump weight per generation-T box, keyed by gen-T anchor
  std::map<std::vector<long>, Rational> bump_w;

  Rational weight_sum(0);
  std::vector<long> counts(static_cast<size_t>(d));
  for (int i = 0; i < d; ++i) counts[static_cast<size_t>(i)] = 1L << (K.n_vec()[static_cast<size_t>(i)] * T);
  std::vector<long> a(static_cast<size_t>(d), 0);
  while (true) {
    DyadicBox q;
    q.n_vec = K.n_vec();
    q.generation = T;
    q.anchor = a;
    if (!Krs.find(q))
      throw DensityUnmet("build_pipeline_measure: a generation-T descendant misses K");
    Rational w(1);
    for (int i = 0; i < d; ++i) w *= trapezoid_bump_integral(q.lo(i), q.hi(i), delta_b);
    weight_sum += w;
    bump_w[a] = w;
    if (sgn(w) > 0) {
      BoxSet Eq = Krs.restricted(q);
      FrostmanCertificate cert = frostman(Eq, s);
      Alg2 factor = Alg2(w, qden) * cert.total_mass.inverse();
      for (const auto& [anchor, mass] : cert.box_masses) {
        auto it = mu_mass.find(anchor);
        if (it == mu_mass.end())
          mu_mass.emplace(anchor, factor * mass);
        else
          it->second += factor * mass;
      }
    }
    // odometer over generation-T anchors
    int c = 0;
    while (c < d && ++a[static_cast<size_t>(c)] == counts[static_cast<size_t>(c)])
      a[static_cast<size_t>(c++)] = 0;
    if (c == d) break;
  }

  res.nu_mass = res.ell_Q_s * Alg2(weight_sum, qden);
  res.mass_exact = (weight_sum == 1) && (res.nu_mass == res.ell_Q_s);

  // Frostman audit over all tree boxes of the rescaled tree (boxes outside
  // the tree carry zero mass) plus the generation-T equality check
  res.max_frostman_ratio = Alg2(0L, qden);
  res.gen_T_exact = true;
  {
    std::function<Alg2(const BoxSet::Node*, long, std::vector<long>&)> scan =
        [&](const BoxSet::Node* node, long gen, std::vector<long>& anchor) -> Alg2 {
      Alg2 mass(0L, qden);
      if (gen == Jp) {
        auto it = mu_mass.find(anchor);
        if (it != mu_mass.end()) mass = it->second;
      } else {
        for (const auto& [idx, kid] : node->kids) {
          auto r = decode_child(idx, K.n_vec());
          std::vector<long> na(anchor.size());
          for (size_t i = 0; i < anchor.size(); ++i)
            na[i] = (anchor[i] << K.n_vec()[i]) + r[i];
          mass += scan(kid.get(), gen + 1, na);
        }
      }
      res.max_frostman_ratio =
          max(res.max_frostman_ratio, mass * Alg2::pow2(Rational(gen) * ctx.s, qden));
      if (gen == T && mass != Alg2(bump_w[anchor], qden)) res.gen_T_exact = false;
      return mass;
    };
    std::vector<long> a0(static_cast<size_t>(d), 0);
    scan(Krs.root(), 0, a0);
  }
  res.frostman_ok = res.max_frostman_ratio <= Alg2(4L, qden);

  // assemble mu and nu as discrete measures with cells
  res.mu.d = d;
  res.mu.label = "frostman";
  res.mu.cell_sides.resize(static_cast<size_t>(d));
  for (int i = 0; i < d; ++i)
    res.mu.cell_sides[static_cast<size_t>(i)] =
        std::pow(2.0, -static_cast<double>(K.n_vec()[static_cast<size_t>(i)] * Jp));
  for (const auto& [anchor, mass] : mu_mass) {
    std::vector<double> pt(anchor.size());
    for (size_t i = 0; i < anchor.size(); ++i)
      pt[i] = (static_cast<double>(anchor[i]) + 0.5) * res.mu.cell_sides[i];
    res.mu.points.push_back(pt);
    res.mu.weights.push_back(mass.to_double());
    res.mu_box_masses.emplace_back(anchor, mass);
  }

  res.nu.d = d;
  res.nu.label = "frostman";
  res.nu.cell_sides.resize(static_cast<size_t>(d));
  double ell_s_d = res.ell_Q_s.to_double();
  for (int i = 0; i < d; ++i)
    res.nu.cell_sides[static_cast<size_t>(i)] =
        std::pow(2.0, -static_cast<double>(K.n_vec()[static_cast<size_t>(i)] * K.depth()));
  for (size_t k = 0; k < res.mu.points.size(); ++k) {
    std::vector<double> pt(res.mu.points[k].size());
    for (int i = 0; i < d; ++i)
      pt[static_cast<size_t>(i)] =
          res.Q.lo(i).get_d() + res.mu.points[k][static_cast<size_t>(i)] * res.Q.side(i).get_d();
    res.nu.points.push_back(std::move(pt));
    res.nu.weights.push_back(res.mu.weights[k] * ell_s_d);
  }

  // spectral proxy on the integer xi-grid A <= |xi| <= B
  {
    double A = std::pow(2.0, static_cast<double>(bundle.A_log2));
    double B = std::pow(2.0, static_cast<double>(bundle.log2_B));
    long Bi = static_cast<long>(std::floor(B));
    double npoints = std::pow(2.0 * Bi + 1.0, d);
    long stride = 1;
    while (npoints / std::pow(static_cast<double>(stride), d) > 3.0e5) ++stride;
    double acc = 0;
    std::vector<long> xi(static_cast<size_t>(d), -Bi);
    while (true) {
      double norm2 = 0;
      for (long v : xi) norm2 += static_cast<double>(v) * static_cast<double>(v);
      double norm = std::sqrt(norm2);
      if (norm >= A && norm <= B) {
        std::vector<double> xid(xi.begin(), xi.end());
        acc += std::norm(cell_fourier(res.mu.points, res.mu.weights, res.mu.cell_sides, xid));
      }
      int c = 0;
      while (c < d) {
        xi[static_cast<size_t>(c)] += stride;
        if (xi[static_cast<size_t>(c)] > Bi)
          xi[static_cast<size_t>(c++)] = -Bi;
        else
          break;
      }
      if (c == d) break;
    }
    res.spectral_mass = acc * std::pow(static_cast<double>(stride), d);
    res.spectral_budget = std::pow(A, -4.0 * d);
    res.spectral_ok = res.spectral_mass <= res.spectral_budget;
  }

  for (const auto& e : bundle.audit)
    if (!e.satisfied) res.demo_violations.push_back("constants: " + e.name);
  if (!res.spectral_ok) res.demo_violations.push_back("spectral gap condition at demo constants");
  if (!res.frostman_ok) res.demo_violations.push_back("dyadic Frostman condition");
  if (!res.mass_exact) res.demo_violations.push_back("nu mass identity");

  return res;
}

// ------------------------------------------------------------------ json --

std::string frostman_to_json(const FrostmanCertificate& cert) {
  nlohmann::json j;
  j["n_vec"] = cert.n_vec;
  j["depth"] = cert.depth;
  j["s"] = rat_str(cert.s);
  j["leaves"] = cert.box_masses.size();
  j["total_mass"] = cert.total_mass.str();
  j["content_lb"] = cert.content_lb.str();
  j["max_ratio"] = cert.max_ratio.str();
  j["total_mass_approx"] = cert.total_mass.to_double();
  return j.dump(2);
}

std::string pipeline_to_json(const PipelineResult& r) {
  nlohmann::json j;
  j["Q"] = r.Q.str();
  j["T"] = r.T;
  j["delta"] = rat_str(r.delta);
  j["nu_mass"] = r.nu_mass.str();
  j["ell_Q_s"] = r.ell_Q_s.str();
  j["mass_exact"] = r.mass_exact;
  j["max_frostman_ratio"] = r.max_frostman_ratio.str();
  j["frostman_ok"] = r.frostman_ok;
  j["gen_T_exact"] = r.gen_T_exact;
  j["spectral_mass"] = r.spectral_mass;
  j["spectral_budget"] = r.spectral_budget;
  j["spectral_ok"] = r.spectral_ok;
  j["atoms"] = r.mu.points.size();
  j["demo_violations"] = r.demo_violations;
  return j.dump(2);
}

}  // namespace curvepat
