#pragma once

#include "dunkl/certificate.hpp"
#include "dunkl/quadrature.hpp"
#include "dunkl/root_system.hpp"

#include <vector>

namespace dunkl {

struct BallVolume {
  Vec center;
  double radius = 0.0;
  double value = 0.0;
  double error_estimate = 0.0;
};

class WeightFunction {
 public:
  explicit WeightFunction(RootSystem rs);

  double operator()(const Vec& x) const;
  const RootSystem& system() const { return rs_; }

  // w restricted to axis j for product systems: 2^k |u|^{2k}
  double axis_weight(int j, double u) const;
  // antiderivative of axis_weight vanishing at 0
  double axis_primitive(int j, double u) const;

  BallVolume ball_volume(const Vec& center, double radius, const QuadSettings& q = {}) const;
  double box_mass(const Vec& lo, const Vec& hi, const QuadSettings& q = {}) const;
  // max(w(B(x,t)), w(B(y,t)))
  double V(const Vec& x, const Vec& y, double t, const QuadSettings& q = {}) const;

 private:
  double nested_ball(const Vec& c, double r2, Vec& x, int d, const QuadSettings& q,
                     double& err) const;
  double nested_box(const Vec& lo, const Vec& hi, Vec& x, int d, const QuadSettings& q,
                    double& err) const;
  std::vector<double> walls_at(const Vec& x, int d) const;

  RootSystem rs_;
};

inline double weight(const WeightFunction& w, const Vec& x) { return w(x); }

inline BallVolume ball_volume(const WeightFunction& w, const Vec& c, double r,
                              const QuadSettings& q = {}) {
  return w.ball_volume(c, r, q);
}

inline double V_max(const WeightFunction& w, const Vec& x, const Vec& y, double t,
                    const QuadSettings& q = {}) {
  return w.V(x, y, t, q);
}

// Closed form for product systems: prod_j 2^{2k_j+1/2} Gamma(k_j+1/2).
double c_k_product(const RootSystem& rs);

// c_k = integral of exp(-|x|^2/2) dw. Product systems use the closed form; otherwise
// homogeneity reduces it to N_hom * w(B(0,1)) * 2^{N_hom/2-1} Gamma(N_hom/2).
double c_k_constant(const WeightFunction& w, const QuadSettings& q = {1e-8, 0.0, 24});

struct MeasureSweep {
  std::vector<Vec> centers;
  std::vector<double> radii;
};

// Certificates "measure_behavior", "measure_doubling", "measure_growth".
std::vector<EstimateCertificate> certify_measure_facts(const WeightFunction& w,
                                                       const MeasureSweep& sweep,
                                                       const QuadSettings& q = {});

}  // namespace dunkl
