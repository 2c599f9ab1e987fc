#pragma once

#include "dunkl/grid_operators.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace dunkl {

// A Euclidean ball, or an axis-parallel cube given by its center and half side.
struct Region {
  enum class Kind { Ball, Cube };
  Kind kind = Kind::Ball;
  Vec center;
  double radius = 0.0;

  static Region ball(const Vec& c, double r) { return {Kind::Ball, c, r}; }
  static Region cube(const Vec& lo, double side) {
    return {Kind::Cube, (lo.array() + 0.5 * side).matrix(), 0.5 * side};
  }
  // distance by which x lies outside the region (0 inside)
  double excess(const Vec& x) const;
  bool contains(const Vec& x, double slack = 0.0) const { return excess(x) <= slack; }
  double measure(const WeightFunction& w) const;
  // dw-mass of the grid cells whose centers lie in the region
  double grid_mass(const WeightedGridFunction& f) const;
  nlohmann::json to_json() const;
};

struct CWAtomReport {
  Region region;
  double q = 2.0;
  double tol = 1e-6;
  double support_excess = 0.0;  // beyond the allowed half-cell slack
  bool support_ok = false;
  double norm = 0.0;            // ||a||_{L^q(dw)}
  double size_bound = 0.0;      // w(B)^{1/q - 1}
  bool size_ok = false;
  double integral = 0.0;
  double l1 = 0.0;
  bool cancellation_ok = false;
  bool pass = false;
  double multiple() const { return size_bound > 0.0 ? norm / size_bound : INFINITY; }
  nlohmann::json to_json() const;
};

// q in (1, inf]; q = INFINITY is the sup over cells of positive mass.
CWAtomReport validate_cw_atom(const WeightedGridFunction& a, const Region& region, double q, double tol = 1e-6);

// Radial mean-zero profile on B(0, 1/4): (u^2 - beta) exp(-1/(1 - u^2)), u = 4|x|.
class PsiProfile {
 public:
  explicit PsiProfile(double hom_dim);
  double operator()(double rho) const;  // t = 1
  double at(double t, double rho) const { return std::pow(t, -hom_) * (*this)(rho / t); }
  double beta() const { return beta_; }
  double support() const { return 0.25; }
  double hom_dim() const { return hom_; }

 private:
  double hom_ = 1.0;
  double beta_ = 0.0;
};

// Psi_t(x, y) = tau_x Psi_t(-y) for a rank-one or product system.
class PsiKernel {
 public:
  explicit PsiKernel(const RootSystem& rs, int order = 48);
  double operator()(double t, const Vec& x, const Vec& y) const;
  const PsiProfile& profile() const { return psi_; }
  const RootSystem& system() const { return rs_; }

 private:
  double rank_one(double t, double x, double y) const;

  RootSystem rs_;
  PsiProfile psi_;
  double k_ = 0.0, c_ = 1.0;
  Rule below_, above_;  // power rules u^{k-1}, u^k on [0, 1]
};

// A(t, x) sampled on log-spaced t levels, each level a cell function; dt/t has mass log_step per level.
struct TentAtom {
  Vec y0;
  double r = 0.0;
  std::vector<double> t;
  double log_step = 0.0;
  std::vector<WeightedGridFunction> slices;

  // A constant on the tent {(t, x): |x - y0| + t <= r}, levels t_min 2^{i/per_octave} < r,
  // scaled so that sum_t log_step ||A(t,.)||_2^2 = 1/w(B(y0, r)).
  static TentAtom indicator(const WeightFunction& w, const Vec& lo, const Vec& hi, int level, const Vec& y0,
                            double r, double t_min, int per_octave = 2);

  double t2_norm_squared() const;  // sum_t log_step ||A(t,.)||_2^2
  nlohmann::json check(double tol = 1e-6) const;  // support in the tent, size <= (1 + tol)/w(B)
};

struct PiPsiOptions {
  int gauss = 16;                // points per piece and axis
  double piece_fraction = 1.0 / 16.0;  // pieces no longer than this times t
};

// g = pi_Psi A as cell averages on the grid of A.
WeightedGridFunction pi_psi_apply(const PsiKernel& psi, const TentAtom& A, const PiPsiOptions& opt = {});

struct LemmaReport {
  bool skipped = false;
  std::string reason;
  double gap = 0.0;                   // |sigma(y0) - y0|
  double pointwise_ratio = 0.0;       // sup |a(t,x)| / (t^2/gap^2 sum M_HL(A(t,.))(sigma' x))
  double l2_on_ball = 0.0;            // ||g||_{L^2(B(sigma y0, r))}
  double l2_ratio = 0.0;              // l2_on_ball / (w(B)^{-1/2} r^2/gap^2)
  bool pass = false;
  nlohmann::json to_json() const;
};

// sigma is an element of the Weyl group of psi.system()
LemmaReport check_lemma_bounds(const PsiKernel& psi, const TentAtom& A, const Mat& sigma,
                               const PiPsiOptions& opt = {});
// sigma chosen as the group element with the largest gap; skipped when none exceeds 4r
LemmaReport check_lemma_bounds(const PsiKernel& psi, const TentAtom& A, const PiPsiOptions& opt = {});
// same, reusing an already computed g = pi_Psi A
LemmaReport check_lemma_bounds(const PsiKernel& psi, const TentAtom& A, const Mat& sigma,
                               const WeightedGridFunction& g, const PiPsiOptions& opt = {});

struct DecompositionEntry {
  explicit DecompositionEntry(WeightedGridFunction a) : atom(std::move(a)) {}
  double lambda = 0.0;       // coefficient * multiple
  double coefficient = 0.0;  // structural coefficient of the construction
  double multiple = 0.0;     // atom = piece / multiple satisfies the size condition with equality
  double q = 2.0;
  Region region;
  std::string kind;          // "local", "chain", "final", "good", ...
  int round = 0;
  WeightedGridFunction atom;
  CWAtomReport report;
};

struct Decomposition {
  explicit Decomposition(WeightedGridFunction zero) : residual(std::move(zero)) {}
  std::string mode;
  std::vector<DecompositionEntry> entries;
  WeightedGridFunction residual;
  double residual_l1 = 0.0;
  double reconstruction_l1 = 0.0;  // ||input - sum lambda a - residual||_1
  double coefficient_sum = 0.0;    // sum |lambda|
  nlohmann::json bookkeeping = nlohmann::json::object();

  bool all_valid() const;
  // atom data is referenced as <stem>_<index>; the caller stores the grid functions
  nlohmann::json to_json(const std::string& atom_stem = "atom") const;
};

struct ChainOptions {
  double budget = 1.0;      // L^2 budget constant for the orbit pieces
  double tol = 1e-6;
};

// g supported on the orbit of B(y0, r), mean zero. Balls should have walls on cell walls.
Decomposition chain_decompose(const WeightedGridFunction& g, const Vec& y0, double r, const ChainOptions& opt = {});

struct C1Estimate {
  double max_ratio = 0.0;  // max w(Q) / w(Q') over sampled pairs
  double C1 = 0.0;         // inflated by 10%
  std::size_t pairs = 0;
};

// every (Q, Q') with Q' one of the 2^N half-side sub-cubes of Q
C1Estimate estimate_C1(const WeightFunction& w, const std::vector<Region>& cubes);
// all dyadic cubes of the grid inside Q, down to cells of side 2 cells
C1Estimate estimate_C1(const WeightFunction& w, const WeightedGridFunction& grid, const Region& Q);

struct CZOptions {
  int rounds = 30;
  double tol = 1e-6;
  std::optional<double> C1;  // default: estimated on the dyadic cubes of Q
};

// Q must be a dyadic cube of the grid of a.
Decomposition cz_split(const WeightedGridFunction& a, const Region& Q, const CZOptions& opt = {});

}  // namespace dunkl
