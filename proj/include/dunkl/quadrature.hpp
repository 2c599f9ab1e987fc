#pragma once

#include <functional>
#include <vector>

namespace dunkl {

struct QuadSettings {
  double rel_tol = 1e-6;
  double abs_tol = 0.0;
  unsigned max_depth = 20;
  bool relative_to_l1 = false;  // rel_tol measured against int |f| instead of |int f|
};

struct QuadResult {
  double value = 0.0;
  double error = 0.0;
  double l1 = 0.0;
};

// Adaptive Gauss-Kronrod (15 point) on [a, b], split at the interior breakpoints.
QuadResult integrate(const std::function<double(double)>& f, double a, double b,
                     const std::vector<double>& breaks, const QuadSettings& q);

// Same, but a breakpoint endpoint singularity is absorbed by the tanh-sinh rule.
// tol is relative to int |f|.
QuadResult integrate_singular(const std::function<double(double)>& f, double a, double b,
                              double tol);

// f(x, x - a, b - x) with both distances free of cancellation near the ends.
QuadResult integrate_singular(const std::function<double(double, double, double)>& f, double a,
                              double b, double tol, double abs_tol = 0.0);

struct Rule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

// n-point Gauss-Legendre rule on [a, b].
Rule gauss_legendre(int n, double a, double b);

// n-point Gauss rule for the weight (x - a)^p on [a, b], p > -1 (Golub-Welsch).
Rule gauss_power(int n, double p, double a, double b);

}  // namespace dunkl
