#pragma once

#include "dunkl/root_system.hpp"

#include <complex>
#include <functional>
#include <vector>

namespace dunkl {

// Rank-one kernel E_k(z), where E(x, y) = E_k(xy) for R = {±sqrt(2)}.
// Coefficients obey (n + k(1 - (-1)^n)) c_n = c_{n-1}, c_0 = 1.
struct SeriesResult {
  double value = 0.0;
  int terms = 0;
  double tail_bound = 0.0;
};

// Plain partial sums of the defining series; accurate for z >= 0 or moderate |z|.
SeriesResult rank_one_series(double k, double z);

double rank_one_scaled(double k, double z);        // exp(-|z|) E_k(z)
double rank_one_log(double k, double z);           // log E_k(z)
double rank_one(double k, double z);               // E_k(z), may overflow to inf
double rank_one_deriv_scaled(double k, double z);  // exp(-|z|) E_k'(z)
std::complex<double> rank_one_imag(double k, double z);  // E_k(-iz)

// Gamma(alpha+1) (x/2)^{-alpha} J_alpha(|x|), equal to 1 at x = 0.
double normalized_bessel_j(double alpha, double x);

class DunklKernel {
 public:
  explicit DunklKernel(const RootSystem& rs);

  int dim() const { return static_cast<int>(k_.size()); }
  const std::vector<double>& k() const { return k_; }

  double operator()(const Vec& x, const Vec& y) const;
  double log(const Vec& x, const Vec& y) const;
  // E(-ix, y)
  std::complex<double> imag(const Vec& x, const Vec& y) const;

 private:
  std::vector<double> k_;
};

inline double dunkl_kernel_E(const DunklKernel& E, const Vec& x, const Vec& y) { return E(x, y); }
inline std::complex<double> dunkl_kernel_E_imag(const DunklKernel& E, const Vec& x, const Vec& y) {
  return E.imag(x, y);
}

using ScalarField = std::function<double(const Vec&)>;

struct OperatorOptions {
  double step = 1e-3;
  bool wall_limit = true;
};

// T_xi f(x) with a 4th-order central stencil for the directional derivative.
double apply_dunkl_operator(const RootSystem& rs, const ScalarField& f, const Vec& xi, const Vec& x,
                            const OperatorOptions& opt = {});

// 4th-order central difference of f along direction v at x.
double directional_derivative(const ScalarField& f, const Vec& v, const Vec& x, double h);

}  // namespace dunkl
