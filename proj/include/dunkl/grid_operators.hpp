#pragma once

#include "dunkl/heat_kernel.hpp"
#include "dunkl/weighted_measure.hpp"

#include <json.hpp>

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace dunkl {

// Piecewise-constant function on the dyadic grid of a box: 2^level cells per axis,
// one value per cell (taken at the center) and the exact dw-mass of every cell.
class WeightedGridFunction {
 public:
  WeightedGridFunction(const WeightFunction& w, const Vec& lo, const Vec& hi, int level);
  static WeightedGridFunction sample(const WeightFunction& w, const Vec& lo, const Vec& hi, int level,
                                     const std::function<double(const Vec&)>& f);

  const WeightFunction& weight() const { return w_; }
  int dim() const { return static_cast<int>(lo_.size()); }
  int level() const { return level_; }
  const Vec& lo() const { return lo_; }
  const Vec& hi() const { return hi_; }
  long per_axis() const { return 1L << level_; }
  std::size_t size() const { return values_.size(); }
  Vec cell_size() const;

  std::vector<long> multi_index(std::size_t i) const;
  std::size_t flat_index(const std::vector<long>& m) const;
  Vec center(std::size_t i) const;
  Vec cell_lo(std::size_t i) const;
  Vec cell_hi(std::size_t i) const;
  // cell containing x, or size() when x is outside the box
  std::size_t locate(const Vec& x) const;

  double value(std::size_t i) const { return values_[i]; }
  double& value(std::size_t i) { return values_[i]; }
  double mass(std::size_t i) const { return masses_[i]; }
  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }
  const std::vector<double>& masses() const { return masses_; }

  WeightedGridFunction with_values(std::vector<double> v) const;
  WeightedGridFunction refined() const;  // same function on level + 1, children inherit the parent value

  double integral() const;
  double total_mass() const;
  // ||f||_{L^p(dw)}; p = infinity gives the largest |value| over cells of positive mass
  double norm(double p) const;
  // bounding box of the cells with nonzero value; empty when f = 0
  bool support_box(Vec& lo, Vec& hi) const;

  nlohmann::json header() const;
  void write(std::ostream& header, std::ostream& csv) const;
  static WeightedGridFunction read(std::istream& header, std::istream& csv);
  void save(const std::string& stem) const;  // stem.json, stem.csv
  static WeightedGridFunction load(const std::string& stem);

 private:
  WeightFunction w_;
  Vec lo_, hi_;
  int level_ = 0;
  std::vector<double> values_, masses_;
};

nlohmann::json root_system_to_json(const RootSystem& rs);
RootSystem root_system_from_json(const nlohmann::json& j);

// Cone nodes (t, y) with |x - y| < t. The y candidates are fixed points, normally the cell
// centers of the function being examined.
struct ConeGrid {
  std::vector<double> t;  // ascending
  std::vector<Vec> y;

  // t from the smallest cell side to 4 diam(supp f) + max dist(x, supp f), geometric with t_per_octave
  static ConeGrid for_function(const WeightedGridFunction& f, const std::vector<Vec>& xs, int t_per_octave = 4);
  ConeGrid refined() const;  // doubles the t density, keeps every old node
  bool in_cone(const Vec& x, std::size_t ti, std::size_t yi) const { return (x - y[yi]).norm() < t[ti]; }
};

struct GridOperatorValue {
  double value = 0.0;
  bool lower_bound = false;  // true for discrete suprema
  double t = 0.0;            // maximizing node, when there is one
  Vec y;
  double radius = 0.0;
  double truncation_bound = 0.0;  // what the omitted part of the cone can add
  nlohmann::json resolution = nlohmann::json::object();
};

// sup over cone nodes of |exp(t^2 Delta) f(y)|, cell-midpoint quadrature in z.
std::vector<GridOperatorValue> nontangential_heat_maximal(const HeatKernel& h, const WeightedGridFunction& f,
                                                          const std::vector<Vec>& xs, const ConeGrid& cone);
GridOperatorValue nontangential_heat_maximal(const HeatKernel& h, const WeightedGridFunction& f, const Vec& x,
                                             const ConeGrid& cone);

struct BallSweep {
  double r_min = 0.0;  // 0: smallest cell side
  double r_max = 0.0;  // 0: box diameter
  int per_octave = 4;
  int radial = 4;      // centers x + r (i/radial) e, i < radial
  int directions = 8;  // used for N = 2
  bool exact_1d = true;
};

// sup over balls containing x of the dw-average of |f|. In 1D with exact_1d the supremum
// over all intervals with endpoints on cell walls or at x is exact for the grid function;
// otherwise cells count when their center lies in the ball.
GridOperatorValue hardy_littlewood_maximal(const WeightedGridFunction& f, const Vec& x, const BallSweep& sweep = {});

// S f(x)^2 = sum over cone nodes of |Q_t f(y)|^2 mass(y) dt/t / w(B(x,t)), Q_t f = t d/dt P_t f.
std::vector<GridOperatorValue> square_function(const HeatKernel& h, const WeightedGridFunction& f,
                                               const std::vector<Vec>& xs, const ConeGrid& cone,
                                               double log_step = 0.25);
GridOperatorValue square_function(const HeatKernel& h, const WeightedGridFunction& f, const Vec& x,
                                  const ConeGrid& cone, double log_step = 0.25);

// L^1(dw) norm of a nonnegative cell function, with the remainder outside the box bounded by
// C r / d(x, x0) / w(B(x0, d(x, x0))), C fitted on the outer cells. One dimension only for the tail.
struct L1Estimate {
  double inside = 0.0;
  double tail = 0.0;
  double tail_constant = 0.0;
  double total() const { return inside + tail; }
};
L1Estimate l1_norm_with_tail(const WeightedGridFunction& g, const Vec& x0, double r);

}  // namespace dunkl
