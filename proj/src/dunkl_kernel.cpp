#include "dunkl/dunkl_kernel.hpp"

#include <boost/math/special_functions/bessel.hpp>

#include <cmath>
#include <numbers>

namespace dunkl {

namespace {

constexpr int kMaxTerms = 20000;

double asymptotic_threshold(double k) {
  const double nu = k + 0.5;
  return std::max(30.0, 2.0 * nu * nu);
}

struct Split {
  double even = 0.0, odd = 0.0;
};

// Even and odd parts of sum c_n a^n for a >= 0, both positive.
Split split_series(double k, double a) {
  Split s;
  s.even = 1.0;
  double term = 1.0;
  int small = 0;
  for (int n = 1; n < kMaxTerms; ++n) {
    term *= a / (n + ((n & 1) ? 2.0 * k : 0.0));
    if (n & 1) s.odd += term;
    else s.even += term;
    const double total = s.even + s.odd;
    if (term < 1e-16 * total) ++small;
    else small = 0;
    const double rho = a / (n + 1.0);
    if (small >= 5 && rho < 1.0 && term * rho / (1.0 - rho) < 1e-12 * total) return s;
  }
  throw BudgetExceeded("Dunkl kernel series did not converge", s.even + s.odd);
}

// exp(-a) E_k(±a) from the large-argument expansion of I_{k-1/2} ± I_{k+1/2}.
double asymptotic_scaled(double k, double a, bool negative) {
  const double nu1 = k - 0.5, nu2 = k + 0.5;
  const double pref = std::exp(std::lgamma(k + 0.5) + (0.5 - k) * std::log(0.5 * a) -
                               0.5 * std::log(2.0 * std::numbers::pi * a));
  double t1 = 1.0, t2 = 1.0;
  double sum = negative ? 0.0 : 2.0;
  double last = INFINITY;
  for (int m = 1; m < 400; ++m) {
    const double odd = (2.0 * m - 1.0) * (2.0 * m - 1.0);
    t1 *= -(4.0 * nu1 * nu1 - odd) / (8.0 * m * a);
    t2 *= -(4.0 * nu2 * nu2 - odd) / (8.0 * m * a);
    const double term = negative ? (t1 - t2) : (t1 + t2);
    if (std::abs(term) > last && m > 2) break;  // divergent tail begins
    sum += term;
    last = std::abs(term);
    if (last < 1e-17 * std::abs(sum)) break;
  }
  return pref * sum;
}

}  // namespace

SeriesResult rank_one_series(double k, double z) {
  SeriesResult r;
  double term = 1.0, sum = 1.0;
  int small = 0;
  for (int n = 1; n < kMaxTerms; ++n) {
    term *= z / (n + ((n & 1) ? 2.0 * k : 0.0));
    sum += term;
    if (std::abs(term) < 1e-16 * std::abs(sum)) ++small;
    else small = 0;
    const double rho = std::abs(z) / (n + 1.0);
    const double tail = rho < 1.0 ? std::abs(term) * rho / (1.0 - rho) : INFINITY;
    if (small >= 5 && tail < 1e-12 * std::abs(sum)) {
      r.value = sum;
      r.terms = n + 1;
      r.tail_bound = tail;
      return r;
    }
  }
  throw BudgetExceeded("Dunkl kernel series did not converge", sum);
}

double rank_one_scaled(double k, double z) {
  const double a = std::abs(z);
  if (k == 0.0) return std::exp(z - a);
  if (a > asymptotic_threshold(k)) return asymptotic_scaled(k, a, z < 0.0);
  const Split s = split_series(k, a);
  const double v = z >= 0.0 ? s.even + s.odd : s.even - s.odd;
  return v * std::exp(-a);
}

double rank_one_log(double k, double z) {
  if (k == 0.0) return z;
  return std::abs(z) + std::log(rank_one_scaled(k, z));
}

double rank_one(double k, double z) { return std::exp(rank_one_log(k, z)); }

double rank_one_deriv_scaled(double k, double z) {
  const double a = std::abs(z);
  if (k == 0.0) return std::exp(z - a);
  if (a < 1.0) {
    // term-by-term derivative of the series
    double term = 1.0, sum = 0.0;
    for (int n = 1; n < 200; ++n) {
      term *= (n == 1 ? 1.0 : z) / (n + ((n & 1) ? 2.0 * k : 0.0));
      // term holds c_n z^{n-1}
      sum += n * term;
      if (std::abs(n * term) < 1e-18 * std::abs(sum) && n > 4) break;
    }
    return sum * std::exp(-a);
  }
  const double ep = rank_one_scaled(k, z), em = rank_one_scaled(k, -z);
  return ep - k * (ep - em) / z;
}

double normalized_bessel_j(double alpha, double x) {
  x = std::abs(x);
  if (x < 2.0) {
    const double q = -0.25 * x * x;
    double term = 1.0, sum = 1.0;
    for (int m = 1; m < 60; ++m) {
      term *= q / (m * (alpha + m));
      sum += term;
      if (std::abs(term) < 1e-18 * std::abs(sum)) break;
    }
    return sum;
  }
  const double n = alpha - 0.5;
  if (n >= -1.0 && n == std::round(n) && x > n + 1.0) {
    // half-integer order: upward recurrence of x^{-1/2}-scaled spherical Bessel functions is stable here
    double a = std::cos(x), b = std::sin(x) / x;  // j_{-1/2}, j_{1/2}
    if (n < 0.0) return a;
    for (int m = 1; m <= static_cast<int>(n); ++m) {
      // j_{m+1/2} = (2m+1)/x^2 (j_{m-1/2} - j_{m-3/2}) with normalization folded in
      const double c = (2.0 * m + 1.0) * (2.0 * m - 1.0) / (x * x) * (b - a);
      a = b;
      b = c;
    }
    return b;
  }
  return std::exp(std::lgamma(alpha + 1.0) - alpha * std::log(0.5 * x)) *
         boost::math::cyl_bessel_j(alpha, x);
}

std::complex<double> rank_one_imag(double k, double z) {
  const double a = std::abs(z);
  if (k == 0.0) return {std::cos(z), -std::sin(z)};
  if (a <= 2.0) {
    double re = 1.0, im = 0.0, term = 1.0;
    for (int n = 1; n < 200; ++n) {
      term *= a / (n + ((n & 1) ? 2.0 * k : 0.0));
      // (-i)^n real/imag pattern: n%4 = 0:1, 1:-i, 2:-1, 3:i
      switch (n & 3) {
        case 0: re += term; break;
        case 1: im -= term; break;
        case 2: re -= term; break;
        case 3: im += term; break;
      }
      if (term < 1e-18 && n > 4) break;
    }
    return {re, z < 0.0 ? -im : im};
  }
  const double re = normalized_bessel_j(k - 0.5, a);
  const double im = -z / (2.0 * k + 1.0) * normalized_bessel_j(k + 0.5, a);
  return {re, im};
}

DunklKernel::DunklKernel(const RootSystem& rs) {
  if (!rs.is_product())
    throw UnsupportedSystem("exact Dunkl kernel available only for rank-one and product systems");
  k_ = rs.axis_k();
}

double DunklKernel::log(const Vec& x, const Vec& y) const {
  double s = 0.0;
  for (std::size_t j = 0; j < k_.size(); ++j) {
    const auto i = static_cast<Eigen::Index>(j);
    s += rank_one_log(k_[j], x(i) * y(i));
  }
  return s;
}

double DunklKernel::operator()(const Vec& x, const Vec& y) const { return std::exp(log(x, y)); }

std::complex<double> DunklKernel::imag(const Vec& x, const Vec& y) const {
  std::complex<double> v = 1.0;
  for (std::size_t j = 0; j < k_.size(); ++j) {
    const auto i = static_cast<Eigen::Index>(j);
    v *= rank_one_imag(k_[j], x(i) * y(i));
  }
  return v;
}

double directional_derivative(const ScalarField& f, const Vec& v, const Vec& x, double h) {
  return (-f(x + 2.0 * h * v) + 8.0 * f(x + h * v) - 8.0 * f(x - h * v) + f(x - 2.0 * h * v)) /
         (12.0 * h);
}

double apply_dunkl_operator(const RootSystem& rs, const ScalarField& f, const Vec& xi, const Vec& x,
                            const OperatorOptions& opt) {
  const double h = opt.step;
  double out = directional_derivative(f, xi, x, h);
  const double fx = f(x);
  for (const auto& r : rs.roots()) {
    if (r.multiplicity == 0.0) continue;
    const double ax = r.vector.dot(x);
    const double c = 0.5 * r.multiplicity * r.vector.dot(xi);
    if (c == 0.0) continue;
    if (std::abs(ax) < h) {
      if (!opt.wall_limit && ax == 0.0)
        throw WallSingularity("point lies on a reflecting hyperplane");
      if (opt.wall_limit) {
        // limit of (f(x) - f(sigma x)) / <alpha,x> is the alpha-derivative at the wall projection
        const Vec p = x - (ax / r.vector.squaredNorm()) * r.vector;
        out += c * directional_derivative(f, r.vector * (2.0 / r.vector.squaredNorm()), p, h);
        continue;
      }
    }
    out += c * (fx - f(reflect(r, x))) / ax;
  }
  return out;
}

}  // namespace dunkl
