#pragma once

#include "dunkl/root_system.hpp"

#include <cmath>
#include <complex>
#include <functional>
#include <vector>

namespace dunkl {

// One axis of a tensor grid. Weights already carry the axis density 2^k |x|^{2k},
// so sum_i weights[i] g(nodes[i]) approximates the integral of g against dw.
struct AxisRule {
  std::vector<double> nodes;
  std::vector<double> weights;
  double k = 0.0;
};

// Composite Gauss panels on [-R, R], mirrored about 0. The panel touching 0 uses a
// Gauss-Jacobi rule for x^{2k}.
AxisRule make_axis_rule(double k, double radius, double panel, int order);

struct TransformGrid {
  std::vector<AxisRule> axes;
  double radius = 0.0;
  double panel = 0.0;
  int order = 0;

  static TransformGrid make(const RootSystem& rs, double radius, double panel = 0.5,
                            int order = 16);

  int dim() const { return static_cast<int>(axes.size()); }
  std::size_t size() const;
  Vec point(std::size_t flat) const;
  double weight(std::size_t flat) const;
};

struct SampledFunction {
  TransformGrid grid;
  std::vector<std::complex<double>> values;  // row-major, last axis fastest
};

SampledFunction sample(const TransformGrid& grid, const std::function<double(const Vec&)>& f);

// F f(xi) = c_k^{-1} sum f(x) E(x, -i xi) dw(x), evaluated on the same grid.
SampledFunction dunkl_transform(const SampledFunction& f, double tail_tol = 1e-8);
// F^{-1} g(x) = F g(-x)
SampledFunction inverse_dunkl_transform(const SampledFunction& g, double tail_tol = 1e-8);

double l2_norm(const SampledFunction& f);
double integral(const SampledFunction& f);

// c_k F^{-1}[(F f)(F g)]
SampledFunction dunkl_convolve(const SampledFunction& f, const SampledFunction& g,
                               double tail_tol = 1e-8);

using RadialProfile = std::function<double(double)>;

// Spectral translation of a radial function f(x) = F(|x|) for rank-one and product systems:
// tau_x f(y) = c_k^{-1} int E(i xi, x) E(i xi, y) Ff(xi) dw(xi), with Ff computed as a
// Hankel transform of F.
class RadialTranslator {
 public:
  struct Options {
    double support = 1.0;      // F vanishes beyond this radius
    double xi_max = 400.0;  // frequency truncation
    double xi_panel = 2.0;
    int order = 24;
    int profile_panels = 40;  // panels for the Hankel transform of F
  };

  RadialTranslator(const RootSystem& rs, RadialProfile profile, Options opt);
  RadialTranslator(const RootSystem& rs, RadialProfile profile) : RadialTranslator(rs, std::move(profile), Options{}) {}

  double transform(double s) const;  // Ff at |xi| = s
  double translate(const Vec& x, const Vec& y) const;  // tau_x f(y)
  double kernel(const Vec& x, const Vec& y) const { return translate(x, -y); }  // f(x, y)

 private:
  double axis_factor(int j, double xi, double x, double y) const;

  RootSystem rs_;
  RadialProfile profile_;
  Options opt_;
  std::vector<double> k_;
  double hom_dim_ = 0.0;
  double ck_ = 1.0;
  std::vector<double> r_nodes_, r_weights_;
  AxisRule xi_rule_;            // nonnegative frequencies only
  std::vector<double> f_hat_;   // Ff on xi_rule_ nodes (1D) or on the spline grid
  double spline_h_ = 0.0;
  std::vector<double> spline_;  // Ff on a uniform radial grid for N >= 2
};

// tau_x f(-y) for radial f through the rank-one measure
//   int_{-1}^{1} F(sqrt(x^2 + y^2 - 2xys)) c (1+s)(1-s^2)^{k-1} ds,
// taken axis by axis for product systems. support < inf truncates the s-range.
double translation_kernel_mu(const RootSystem& rs, const RadialProfile& profile, const Vec& x,
                             const Vec& y, double support = INFINITY, double tol = 1e-10);

// sqrt(|x|^2 + |y|^2 - 2<y, eta>)
double radial_support_bound_A(const Vec& x, const Vec& y, const Vec& eta);
// sqrt(|x|^2 - |eta|^2 + |y - eta|^2)
double radial_support_bound_A_alt(const Vec& x, const Vec& y, const Vec& eta);

}  // namespace dunkl
