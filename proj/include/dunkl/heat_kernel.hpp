#pragma once

#include "dunkl/certificate.hpp"
#include "dunkl/quadrature.hpp"
#include "dunkl/root_system.hpp"
#include "dunkl/weighted_measure.hpp"

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

namespace dunkl {

// d_t^m d_{x_a} d_{y_b}; an axis of -1 means no derivative in that variable.
struct DerivSpec {
  int m = 0;
  int x_axis = -1;
  int y_axis = -1;

  int x_order() const { return x_axis >= 0 ? 1 : 0; }
  int y_order() const { return y_axis >= 0 ? 1 : 0; }
  bool none() const { return m == 0 && x_axis < 0 && y_axis < 0; }
  // exponent of t in t^{-m-|a|/2-|b|/2}
  double time_weight() const { return m + 0.5 * x_order() + 0.5 * y_order(); }
};

// Closed-form heat kernel of a rank-one or product system.
class HeatKernel {
 public:
  explicit HeatKernel(const RootSystem& rs, QuadSettings volume_quad = {});

  const RootSystem& system() const { return rs_; }
  const WeightFunction& weight() const { return w_; }
  int dim() const { return rs_.dim(); }
  double c_k() const { return ck_; }
  double hom_dim() const { return hom_; }

  double log_value(double t, const Vec& x, const Vec& y) const;
  double operator()(double t, const Vec& x, const Vec& y) const;

  // (D h_t)(x, y) / h_t(x, y), analytic in the closed form.
  double derivative_ratio(const DerivSpec& d, double t, const Vec& x, const Vec& y) const;
  double derivative(const DerivSpec& d, double t, const Vec& x, const Vec& y) const;

  // w(B(c, r)), memoized.
  double ball_volume(const Vec& c, double r) const;
  double V(const Vec& x, const Vec& y, double r) const;
  // log of V(x,y,sqrt t)^{-1} sum_G exp(-|x - g y|^2 / t)
  double log_gauss(double t, const Vec& x, const Vec& y) const;

 private:
  RootSystem rs_;
  WeightFunction w_;
  QuadSettings quad_;
  std::vector<double> k_;
  std::vector<double> log_c_;
  double ck_ = 1.0, hom_ = 0.0;
  mutable std::mutex cache_mu_;
  mutable std::map<std::vector<double>, double> volumes_;
};

inline double heat_kernel(const HeatKernel& h, double t, const Vec& x, const Vec& y) { return h(t, x, y); }

// Residuals of the operator identities, normalized by the size of the terms involved.
double check_Tj_identity(const HeatKernel& h, int j, double t, const Vec& x, const Vec& y);
double check_Tj2_identity(const HeatKernel& h, int j, double t, const Vec& x, const Vec& y);
double check_dt_identity(const HeatKernel& h, double t, const Vec& x, const Vec& y);
// max over j
double check_Tj_identity(const HeatKernel& h, double t, const Vec& x, const Vec& y);
double check_Tj2_identity(const HeatKernel& h, double t, const Vec& x, const Vec& y);

struct HeatSweep {
  double lo = -6.0, hi = 6.0;
  int points = 7;  // lattice points per coordinate
  std::vector<Vec> extra_points;
  double t_min = 1.0 / 64.0, t_max = 16.0;
  int t_per_octave = 2;
  DerivSpec deriv;
  std::vector<double> holder_steps{0.25, 0.5, 1.0};  // |y - y'| / sqrt t
  std::vector<double> dilations{1.0, 2.0, 4.0, 8.0, 16.0};
  double max_ratio = 1e8;
  double stability = 0.05;
  bool refine = true;

  std::vector<Vec> lattice(int dim) const;
  std::vector<double> times() const;
  HeatSweep refined() const;
};

// rosler, heat_radial, dtdxdy_2t, dtdxdy, heat_holder, heat2, heat3, heat_better2t, heat_better
const std::vector<std::string>& heat_estimate_ids();
EstimateCertificate certify_estimate(const HeatKernel& h, const std::string& id, const HeatSweep& sweep);

struct SharpnessOptions {
  double t_min = 1.0 / 1024.0, t_max = 1.0;
  int t_per_octave = 2;
  double slope_tol = 0.1;
};

// rho(t) = h_t(x,y) w(B(y,sqrt t)) (1 + |x-y|/sqrt t)^{4l} with y = (1,...,1), x a sign vector.
EstimateCertificate certify_product_sharpness(const HeatKernel& h, const Vec& x,
                                              const SharpnessOptions& opt = {});

struct TranslationSweep {
  double t = 1.0;
  std::vector<double> xs;  // points per coordinate, in units of t
  double slack = 0.05;     // support checked where d > (1 + slack) t
  double support_tol = 1e-6;
};

// Phi_t(x,y) = tau_x Phi_t(-y) for a radial bump with support in B(0,1).
EstimateCertificate certify_radial_translation_bound(const HeatKernel& h,
                                                     const std::function<double(double)>& phi,
                                                     const TranslationSweep& sweep);

}  // namespace dunkl
