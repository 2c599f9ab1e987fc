#pragma once

#include "dunkl/certificate.hpp"
#include "dunkl/heat_kernel.hpp"

#include <string>
#include <utility>
#include <vector>

namespace dunkl {

// Trapezoid rule in log u for pi^{-1/2} int_0^inf e^{-u} h_{t^2/(4u)}(x,y) u^{-1/2} du.
struct SubordinationQuadrature {
  double t = 0.0;
  Vec x, y;
  std::vector<double> u, weight;  // p_t ~ sum weight_i h_{t^2/(4 u_i)}(x, y), u ascending
  std::size_t split = 0;          // u_i <= u0 exactly for i < split
  double u0 = 0.25;
  double step = 0.0;              // node spacing in log u
  double tail_bound = 0.0;        // absolute bound on the part outside [u.front(), u.back()]
  double doubling_change = 0.0;   // relative change against the rule with every other node
  double value = 0.0;
};

SubordinationQuadrature subordination_quadrature(const HeatKernel& h, double t, const Vec& x, const Vec& y,
                                                 double tol = 1e-10);

double poisson_kernel(const HeatKernel& h, double t, const Vec& x, const Vec& y, double tol = 1e-10);
// d/dt p_t(x, y)
double q_t_kernel(const HeatKernel& h, double t, const Vec& x, const Vec& y, double tol = 1e-10);

struct PoissonSweep {
  double lo = -4.0, hi = 4.0;
  int points = 9;
  std::vector<Vec> extra_points;
  std::vector<Vec> mirror_points;  // adds the pair (p, -p)
  double t_min = 1.0 / 64.0, t_max = 4.0;
  int t_per_octave = 2;
  DerivSpec deriv{1, -1, -1};  // poisson_dtdy only; x derivatives are not allowed
  double max_ratio = 1e8;
  double stability = 0.05;
  bool refine = true;
  double step = 0.125;        // log-time spacing of the shared quadrature grid
  double quad_tol = 1e-6;     // allowed relative tail and node-doubling change
  double probe_t = 1.0 / 256.0;

  PoissonSweep refined() const;
};

// poisson_up, poisson_dtdy, poisson_new, poisson_dim1, q_bound
const std::vector<std::string>& poisson_estimate_ids();
EstimateCertificate certify_poisson_estimate(const HeatKernel& h, const std::string& id,
                                             const PoissonSweep& sweep);

}  // namespace dunkl
