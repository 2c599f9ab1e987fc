#include "dunkl/quadrature.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <limits>
#include <numbers>
#include <queue>

namespace dunkl {

QuadResult integrate(const std::function<double(double)>& f, double a, double b,
                     const std::vector<double>& breaks, const QuadSettings& q) {
  using GK = boost::math::quadrature::gauss_kronrod<double, 15>;
  struct Piece {
    double a, b, value, error, l1;
    unsigned level;
    bool operator<(const Piece& o) const { return error < o.error; }
  };
  auto eval = [&](double lo, double hi, unsigned level) {
    Piece p{lo, hi, 0.0, 0.0, 0.0, level};
    p.value = GK::integrate(f, lo, hi, 0, 0.0, &p.error, &p.l1);
    return p;
  };

  std::vector<double> pts{a};
  for (double c : breaks)
    if (c > a && c < b) pts.push_back(c);
  pts.push_back(b);
  std::sort(pts.begin(), pts.end());

  // global bisection: always split the piece with the largest error
  std::priority_queue<Piece> heap;
  QuadResult out;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    if (pts[i + 1] <= pts[i]) continue;
    heap.push(eval(pts[i], pts[i + 1], 0));
  }
  auto totals = [&] {
    double v = 0.0, e = 0.0, l = 0.0;
    auto copy = heap;
    while (!copy.empty()) {
      v += copy.top().value;
      e += copy.top().error;
      l += copy.top().l1;
      copy.pop();
    }
    return QuadResult{v, e, l};
  };
  out = totals();
  std::vector<Piece> done;
  const double eps = std::numeric_limits<double>::epsilon();
  std::size_t splits = 0;
  const std::size_t max_splits = std::size_t{1} << std::min(q.max_depth, 16u);
  while (!heap.empty()) {
    const double target = std::max({q.rel_tol * (q.relative_to_l1 ? out.l1 : std::abs(out.value)), q.abs_tol, 50.0 * eps * out.l1});
    if (out.error <= target || splits >= max_splits) break;
    Piece worst = heap.top();
    if (worst.level >= q.max_depth || worst.b - worst.a <= 4.0 * eps * std::max(std::abs(worst.a), 1.0)) {
      heap.pop();
      done.push_back(worst);
      continue;
    }
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    Piece l = eval(worst.a, mid, worst.level + 1), r = eval(mid, worst.b, worst.level + 1);
    out.value += l.value + r.value - worst.value;
    out.error += l.error + r.error - worst.error;
    out.l1 += l.l1 + r.l1 - worst.l1;
    heap.push(l);
    heap.push(r);
    ++splits;
  }
  // resum to drop accumulated cancellation from the running updates
  for (const auto& p : done) heap.push(p);
  return totals();
}

QuadResult integrate_singular(const std::function<double(double, double, double)>& f, double a,
                              double b, double tol, double abs_tol) {
  QuadResult out;
  if (b <= a) return out;
  // x = mid + h tanh(pi/2 sinh tau): double-exponential clustering at both ends
  const double h = 0.5 * (b - a);
  auto g = [&](double tau) {
    const double v = 0.5 * std::numbers::pi * std::sinh(tau);
    const double e = 2.0 / (std::exp(2.0 * std::abs(v)) + 1.0);  // 1 - tanh|v|
    const double near = h * e, far = h * (2.0 - e);
    if (!(near > 0.0)) return 0.0;
    const double x = v >= 0.0 ? b - near : a + near;
    const double ch = std::cosh(v);
    const double jac = h * 0.5 * std::numbers::pi * std::cosh(tau) / (ch * ch);
    return (v >= 0.0 ? f(x, far, near) : f(x, near, far)) * jac;
  };
  QuadSettings q{tol, abs_tol, 18, true};
  return integrate(g, -3.2, 3.2, {0.0}, q);
}

QuadResult integrate_singular(const std::function<double(double)>& f, double a, double b,
                              double tol) {
  return integrate_singular([&](double x, double, double) { return f(x); }, a, b, tol);
}

namespace {

Rule golub_welsch(const Eigen::VectorXd& diag, const Eigen::VectorXd& off, double mu0) {
  const auto n = diag.size();
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    j(i, i) = diag(i);
    if (i + 1 < n) j(i, i + 1) = j(i + 1, i) = off(i);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(j);
  Rule r;
  for (Eigen::Index i = 0; i < n; ++i) {
    r.nodes.push_back(es.eigenvalues()(i));
    const double v = es.eigenvectors()(0, i);
    r.weights.push_back(mu0 * v * v);
  }
  return r;
}

// Gauss-Jacobi on [-1,1] with weight (1-s)^a (1+s)^b.
Rule gauss_jacobi(int n, double a, double b) {
  Eigen::VectorXd diag(n), off(std::max(n - 1, 0));
  for (int i = 0; i < n; ++i) {
    const double s = 2.0 * i + a + b;
    diag(i) = (s == 0.0 || s + 2.0 == 0.0) ? (b - a) / (a + b + 2.0)
                                            : (b * b - a * a) / (s * (s + 2.0));
    if (i == 0) diag(i) = (b - a) / (a + b + 2.0);
  }
  for (int i = 1; i < n; ++i) {
    const double s = 2.0 * i + a + b;
    off(i - 1) = std::sqrt(4.0 * i * (i + a) * (i + b) * (i + a + b) /
                           (s * s * (s + 1.0) * (s - 1.0)));
  }
  const double mu0 = std::pow(2.0, a + b + 1.0) * std::exp(std::lgamma(a + 1.0) + std::lgamma(b + 1.0) -
                                                          std::lgamma(a + b + 2.0));
  return golub_welsch(diag, off, mu0);
}

}  // namespace

Rule gauss_legendre(int n, double a, double b) {
  static std::mutex mu;
  static std::map<int, Rule> cache;
  Rule ref;
  {
    std::lock_guard lock(mu);
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, gauss_jacobi(n, 0.0, 0.0)).first;
    ref = it->second;
  }
  Rule r;
  const double h = 0.5 * (b - a), m = 0.5 * (a + b);
  for (std::size_t i = 0; i < ref.nodes.size(); ++i) {
    r.nodes.push_back(m + h * ref.nodes[i]);
    r.weights.push_back(h * ref.weights[i]);
  }
  return r;
}

Rule gauss_power(int n, double p, double a, double b) {
  // (x - a)^p on [a,b] with x = a + (b-a)(1+s)/2  ->  ((b-a)/2)^p (1+s)^p
  Rule ref = gauss_jacobi(n, 0.0, p);
  Rule r;
  const double h = 0.5 * (b - a);
  const double scale = std::pow(h, p) * h;
  for (std::size_t i = 0; i < ref.nodes.size(); ++i) {
    r.nodes.push_back(a + h * (1.0 + ref.nodes[i]));
    r.weights.push_back(scale * ref.weights[i]);
  }
  return r;
}

}  // namespace dunkl
