#pragma once

#include "dunkl/common.hpp"
#include "dunkl/quadrature.hpp"

#include <cmath>
#include <functional>
#include <vector>

namespace testing_support {

using dunkl::Vec;

// Iterated adaptive quadrature of f against the product weight prod_j 2^{k_j}|z_j|^{2k_j}
// over the box prod_j [lo_j, hi_j], with breakpoints at 0 and at the listed points.
inline double integrate_product_dw(const std::vector<double>& k, const std::function<double(const Vec&)>& f,
                                   const Vec& lo, const Vec& hi, const std::vector<Vec>& marks = {},
                                   double rel_tol = 1e-11) {
  const int n = static_cast<int>(k.size());
  Vec z = Vec::Zero(n);
  std::function<double(int)> level = [&](int d) -> double {
    std::vector<double> br{0.0};
    for (const auto& m : marks) {
      br.push_back(m(d));
      br.push_back(-m(d));
    }
    const double kd = k[static_cast<std::size_t>(d)];
    auto g = [&](double u) {
      z(d) = u;
      const double w = kd == 0.0 ? 1.0 : std::pow(2.0, kd) * std::pow(std::abs(u), 2.0 * kd);
      return w * (d + 1 == n ? f(z) : level(d + 1));
    };
    dunkl::QuadSettings q{d + 1 == n ? rel_tol : rel_tol, 0.0, 30};
    return dunkl::integrate(g, lo(d), hi(d), br, q).value;
  };
  return level(0);
}

}  // namespace testing_support
