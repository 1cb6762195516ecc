#pragma once

#include <iosfwd>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "curvepat/alg2.hpp"
#include "curvepat/constants.hpp"
#include "curvepat/curve.hpp"
#include "curvepat/errors.hpp"
#include "curvepat/measures.hpp"
#include "curvepat/rational.hpp"

namespace curvepat {

struct ZeroMass : DomainError {
  using DomainError::DomainError;
};
struct EmptySet : DomainError {
  using DomainError::DomainError;
};
struct ExponentOutOfRange : DomainError {
  using DomainError::DomainError;
};
struct NoBox : DomainError {
  using DomainError::DomainError;
};
struct DensityUnmet : DomainError {
  using DomainError::DomainError;
};

// Anisotropic dyadic box prod_i [a_i 2^{-n_i j}, (a_i + 1) 2^{-n_i j}).
// Side i has length 2^{-n_i j}; ell(Q) = 2^{-j}; a generation-j box has
// exactly 2^S children at generation j+1, S = n_1 + ... + n_d.
struct DyadicBox {
  std::vector<long> n_vec;
  long generation = 0;
  std::vector<long> anchor;

  int dim() const { return static_cast<int>(n_vec.size()); }
  long S() const;
  long N() const;  // max_i n_i
  Rational side(int i) const;
  Rational lo(int i) const;
  Rational hi(int i) const;
  Rational ell() const;  // 2^{-generation}
  std::vector<Rational> center() const;
  bool contains(const std::vector<Rational>& x) const;
  bool contains(const std::vector<double>& x) const;
  std::string str() const;
};

bool operator==(const DyadicBox& a, const DyadicBox& b);

// box_navigate queries
DyadicBox locate_box(const std::vector<Rational>& x, const std::vector<long>& n_vec, long j);
DyadicBox parent_box(const DyadicBox& Q);
std::vector<DyadicBox> child_boxes(const DyadicBox& Q);
// T_Q(x) = (2^{n_1 j}(x_1 - a_1 2^{-n_1 j}), ...), mapping Q onto [0,1)^d
std::vector<Rational> rescale_to_unit(const DyadicBox& Q, const std::vector<Rational>& x);
std::vector<Rational> rescale_from_unit(const DyadicBox& Q, const std::vector<Rational>& y);

// Finite union of generation-`depth` boxes inside the unit box [0,1)^d,
// stored as a trie keyed by child index 0..2^S-1 so ancestor queries and the
// tree DP below are exact.
class BoxSet {
 public:
  BoxSet() = default;
  BoxSet(std::vector<long> n_vec, long depth);

  int dim() const { return static_cast<int>(n_vec_.size()); }
  long S() const;
  const std::vector<long>& n_vec() const { return n_vec_; }
  long depth() const { return depth_; }
  bool empty() const;
  std::size_t leaf_count() const;

  void insert(const std::vector<long>& leaf_anchor);
  void insert(const DyadicBox& Q);  // generation must equal depth
  bool contains_leaf(const std::vector<long>& leaf_anchor) const;
  std::vector<DyadicBox> leaves() const;

  // leaves lying inside Q (same coordinates, same depth)
  BoxSet restricted(const DyadicBox& Q) const;
  // image of the restriction under T_Q: a BoxSet of depth depth - Q.generation
  BoxSet rescaled(const DyadicBox& Q) const;

  struct Node {
    std::map<long, std::unique_ptr<Node>> kids;
  };
  const Node* root() const { return root_.get(); }
  const Node* find(const DyadicBox& Q) const;  // trie node of an ancestor box

  void save(std::ostream& os) const;
  static BoxSet load(std::istream& is);

 private:
  std::vector<long> n_vec_;
  long depth_ = 0;
  std::unique_ptr<Node> root_;
  std::size_t leaf_count_ = 0;
};

// Exact anisotropic Hausdorff content H^s_{D*}(E) by the bottom-up tree DP
// cost(Q) = min(ell(Q)^s, sum over children meeting E).  Exact because E
// sits inside one root box, so optimal covers can be drawn from the tree.
Alg2 content(const BoxSet& E, const Rational& s);

struct FrostmanCertificate {
  std::vector<long> n_vec;
  long depth = 0;
  Rational s;
  DiscreteMeasure measure;  // atoms at leaf-box centers carrying the cells
  std::vector<std::pair<std::vector<long>, Alg2>> box_masses;  // exact, per leaf
  Alg2 total_mass;   // ||theta||
  Alg2 content_lb;   // H^s_{D*}(E); invariant total_mass >= content_lb
  Alg2 max_ratio;    // max over tree boxes of theta(Q)/ell(Q)^s, <= 1
};

// Finite Frostman construction: uniform ell^s mass on the leaves, capped
// upward generation by generation; all certificate fields exact.
FrostmanCertificate frostman(const BoxSet& E, const Rational& s);

struct EnergyResult {
  double value = 0;
  double L = 0;              // max theta(Q)/ell(Q)^s when known
  double whitney_bound = 0;  // 6^d L / (1 - 2^{sigma + S - d - s})
  bool has_bound = false;
  bool bound_ok = false;
};

// sigma-dimensional Riesz energy.  Atoms with cells get a closed-form
// uniform-cell self-energy on the diagonal; bare atoms contribute only
// off-diagonal terms.
EnergyResult energy(const DiscreteMeasure& m, double sigma);
EnergyResult energy(const FrostmanCertificate& cert, double sigma);

double rho_distance(const std::vector<double>& x, const std::vector<double>& y,
                    const std::vector<long>& n_vec);

// (S - (d - dim_euclidean) * N, S)
std::pair<double, double> anisotropic_dim_bounds(const BoxSet& E, double dim_euclidean);

// Box Q among tree boxes with generation in [J_min, depth] satisfying
// content(K cap Q, s) >= (1 - delta) ell(Q)^s; deterministic order: highest
// density, then smaller generation, then lexicographic anchor.
DyadicBox high_density_box(const BoxSet& K, const Rational& s, const Rational& delta,
                           long J_min = 0);

// Push-forward of nu restricted to Q under T_Q, normalized to a probability
// measure on [0,1]^d.
DiscreteMeasure blow_up(const DiscreteMeasure& nu, const DyadicBox& Q);

struct PipelineResult {
  DyadicBox Q;
  long T = 0;
  Rational delta;
  DiscreteMeasure nu;  // on the original coordinates, total mass ell(Q)^s
  DiscreteMeasure mu;  // = nu^Q, probability on [0,1]^d
  std::vector<std::pair<std::vector<long>, Alg2>> mu_box_masses;  // exact leaf masses of mu
  Alg2 ell_Q_s;
  Alg2 nu_mass;
  bool mass_exact = false;       // ||nu|| == ell(Q)^s
  Alg2 max_frostman_ratio;       // max mu(Q')/ell(Q')^s over tree boxes
  bool frostman_ok = false;      // <= 4
  bool gen_T_exact = false;      // mu(Q'') equals the bump weight on generation-T boxes
  double spectral_mass = 0;      // grid proxy for int_{A<=|xi|<=B} |mu_hat|^2
  double spectral_budget = 0;    // A^{-4d}
  bool spectral_ok = false;
  std::vector<std::string> demo_violations;
};

// Demo-scale run of the measure-existence pipeline: picks the high-density
// box at delta = 2^{-ST-2}, glues per-descendant Frostman measures with
// exact piecewise-linear plateau bump weights, and certifies the mass,
// Frostman, and spectral conditions.  Inequalities the demo constants
// violate are listed, not hidden.
PipelineResult build_pipeline_measure(const BoxSet& K, const Rational& s,
                                      const ConstantBundle& bundle, const CurveStd& curve);

// exact integral over [a,b] of the 1-d piecewise-linear plateau bump with
// ramp width delta: up on [delta, 2 delta], plateau (1-2 delta)^{-1}, down on
// [1-delta, 1]
Rational trapezoid_bump_integral(const Rational& a, const Rational& b, const Rational& delta);

std::string frostman_to_json(const FrostmanCertificate& cert);
std::string pipeline_to_json(const PipelineResult& r);

}  // namespace curvepat
