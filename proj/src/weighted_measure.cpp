#include "dunkl/weighted_measure.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace dunkl {

WeightFunction::WeightFunction(RootSystem rs) : rs_(std::move(rs)) {}

double WeightFunction::operator()(const Vec& x) const {
  double w = 1.0;
  for (const auto& r : rs_.roots()) {
    if (r.multiplicity == 0.0) continue;
    w *= std::pow(std::abs(r.vector.dot(x)), r.multiplicity);
  }
  return w;
}

double WeightFunction::axis_weight(int j, double u) const {
  const double k = rs_.axis_k()[static_cast<std::size_t>(j)];
  if (k == 0.0) return 1.0;
  return std::pow(2.0, k) * std::pow(std::abs(u), 2.0 * k);
}

double WeightFunction::axis_primitive(int j, double u) const {
  const double k = rs_.axis_k()[static_cast<std::size_t>(j)];
  const double p = 2.0 * k + 1.0;
  return std::pow(2.0, k) * std::copysign(std::pow(std::abs(u), p), u) / p;
}

std::vector<double> WeightFunction::walls_at(const Vec& x, int d) const {
  // walls met along coordinate d once coordinates < d are fixed and > d are zero
  std::vector<double> out{0.0};
  const int n = rs_.dim();
  for (const auto& r : rs_.roots()) {
    if (std::abs(r.vector(d)) < 1e-14) continue;
    bool later = false;
    for (int i = d + 1; i < n; ++i) later = later || std::abs(r.vector(i)) > 1e-14;
    if (later) continue;
    double s = 0.0;
    for (int i = 0; i < d; ++i) s += r.vector(i) * x(i);
    out.push_back(-s / r.vector(d));
  }
  return out;
}

double WeightFunction::nested_ball(const Vec& c, double r2, Vec& x, int d,
                                   const QuadSettings& q, double& err) const {
  const int n = rs_.dim();
  double used = 0.0;
  for (int i = 0; i < d; ++i) used += (x(i) - c(i)) * (x(i) - c(i));
  const double rho = std::sqrt(std::max(r2 - used, 0.0));
  if (rho == 0.0) return 0.0;
  const bool product = rs_.is_product();

  if (d == n - 1) {
    if (product) return axis_primitive(d, c(d) + rho) - axis_primitive(d, c(d) - rho);
    std::vector<double> br;
    for (double wpt : walls_at(x, d)) br.push_back(wpt);
    auto f = [&](double u) {
      x(d) = u;
      return (*this)(x);
    };
    QuadSettings inner = q;
    auto res = integrate(f, c(d) - rho, c(d) + rho, br, inner);
    err += res.error;
    return res.value;
  }

  // x_d = c_d + rho sin(theta) removes the square-root endpoint behaviour
  std::vector<double> pts = walls_at(x, d);
  // a wall crossing the slice ball makes the inner integral kink where it leaves the ball
  for (const auto& r : rs_.roots()) {
    double beta = 0.0, ac = 0.0, a2 = 0.0;
    for (int i = 0; i < d; ++i) beta -= r.vector(i) * x(i);
    for (int i = d; i < n; ++i) {
      ac += r.vector(i) * c(i);
      a2 += r.vector(i) * r.vector(i);
    }
    if (a2 < 1e-28 || std::abs(r.vector(d)) * std::abs(r.vector(d)) > a2 * (1.0 - 1e-14)) continue;
    const double dist = std::abs(beta - ac) / std::sqrt(a2);
    if (dist >= rho) continue;
    const double pd = c(d) + (beta - ac) / a2 * r.vector(d);
    const double rr = std::sqrt(rho * rho - dist * dist);
    const double un = std::sqrt(std::max(1.0 - r.vector(d) * r.vector(d) / a2, 0.0));
    pts.push_back(pd - rr * un);
    pts.push_back(pd + rr * un);
  }
  std::vector<double> br;
  for (double wpt : pts) {
    const double s = (wpt - c(d)) / rho;
    if (s > -1.0 && s < 1.0) br.push_back(std::asin(s));
  }
  QuadSettings inner = q;
  inner.rel_tol = q.rel_tol * 0.1;
  auto f = [&](double th) {
    const double u = c(d) + rho * std::sin(th);
    x(d) = u;
    double e = 0.0;
    Vec xc = x;
    double v = nested_ball(c, r2, xc, d + 1, inner, e);
    if (product) v *= axis_weight(d, u);
    return v * rho * std::cos(th);
  };
  auto res = integrate(f, -0.5 * std::numbers::pi, 0.5 * std::numbers::pi, br, q);
  err += res.error;
  return res.value;
}

BallVolume WeightFunction::ball_volume(const Vec& center, double radius,
                                       const QuadSettings& q) const {
  if (!(radius > 0.0)) throw DomainError("ball radius must be positive");
  if (center.size() != rs_.dim()) throw DomainError("center has wrong dimension");
  BallVolume b{center, radius, 0.0, 0.0};
  Vec x = center;
  double err = 0.0;
  b.value = nested_ball(center, radius * radius, x, 0, q, err);
  b.error_estimate = err;
  const double allowed = std::max(q.rel_tol * std::abs(b.value), q.abs_tol);
  if (err > 10.0 * allowed && !rs_.is_product())
    throw BudgetExceeded("ball volume tolerance not reached", b.value);
  return b;
}

double WeightFunction::nested_box(const Vec& lo, const Vec& hi, Vec& x, int d,
                                  const QuadSettings& q, double& err) const {
  const int n = rs_.dim();
  std::vector<double> br = walls_at(x, d);
  auto f = [&](double u) {
    x(d) = u;
    if (d == n - 1) return (*this)(x);
    Vec xc = x;
    QuadSettings inner = q;
    inner.rel_tol = q.rel_tol * 0.1;
    double e = 0.0;
    return nested_box(lo, hi, xc, d + 1, inner, e);
  };
  auto res = integrate(f, lo(d), hi(d), br, q);
  err += res.error;
  return res.value;
}

double WeightFunction::box_mass(const Vec& lo, const Vec& hi, const QuadSettings& q) const {
  if (rs_.is_product()) {
    double m = 1.0;
    for (int j = 0; j < rs_.dim(); ++j) m *= axis_primitive(j, hi(j)) - axis_primitive(j, lo(j));
    return m;
  }
  Vec x = lo;
  double err = 0.0;
  return nested_box(lo, hi, x, 0, q, err);
}

double WeightFunction::V(const Vec& x, const Vec& y, double t, const QuadSettings& q) const {
  return std::max(ball_volume(x, t, q).value, ball_volume(y, t, q).value);
}

double c_k_product(const RootSystem& rs) {
  if (!rs.is_product()) throw UnsupportedSystem("closed-form c_k needs a product system");
  double c = 1.0;
  for (double k : rs.axis_k()) c *= std::pow(2.0, 2.0 * k + 0.5) * std::tgamma(k + 0.5);
  return c;
}

double c_k_constant(const WeightFunction& w, const QuadSettings& q) {
  const auto& rs = w.system();
  if (rs.is_product()) return c_k_product(rs);
  const double nh = rs.hom_dim();
  const double unit = w.ball_volume(Vec::Zero(rs.dim()), 1.0, q).value;
  return nh * unit * std::pow(2.0, 0.5 * nh - 1.0) * std::tgamma(0.5 * nh);
}

std::vector<EstimateCertificate> certify_measure_facts(const WeightFunction& w,
                                                       const MeasureSweep& sweep,
                                                       const QuadSettings& q) {
  const auto& rs = w.system();
  const double n = rs.dim(), nh = rs.hom_dim();
  std::vector<double> radii = sweep.radii;
  std::sort(radii.begin(), radii.end());

  nlohmann::json domain;
  domain["centers"] = sweep.centers.size();
  domain["radii"] = radii;

  EstimateCertificate behavior, doubling, growth;
  behavior.id = "measure_behavior";
  doubling.id = "measure_doubling";
  growth.id = "measure_growth";
  for (auto* c : {&behavior, &doubling, &growth}) {
    c->system = rs.name();
    c->domain = domain;
  }

  double beh_min = INFINITY, beh_max = 0.0, dbl_max = 0.0;
  double grow_low = INFINITY, grow_high = 0.0;
  double slope_min = INFINITY, slope_max = -INFINITY;

  for (const auto& x : sweep.centers) {
    std::vector<double> vols;
    for (double r : radii) {
      const double v = w.ball_volume(x, r, q).value;
      vols.push_back(v);
      double model = std::pow(r, n);
      for (const auto& a : rs.roots()) model *= std::pow(std::abs(x.dot(a.vector)) + r, a.multiplicity);
      const double ratio = v / model;
      if (ratio > beh_max) {
        beh_max = ratio;
        behavior.worst_x = x;
        behavior.worst_t = r;
      }
      beh_min = std::min(beh_min, ratio);

      const double d = w.ball_volume(x, 2.0 * r, q).value / v;
      if (d > dbl_max) {
        dbl_max = d;
        doubling.worst_x = x;
        doubling.worst_t = r;
      }
    }
    for (std::size_t i = 0; i < radii.size(); ++i) {
      for (std::size_t j = i + 1; j < radii.size(); ++j) {
        const double rr = radii[j] / radii[i], vr = vols[j] / vols[i];
        grow_low = std::min(grow_low, vr / std::pow(rr, n));
        grow_high = std::max(grow_high, vr / std::pow(rr, nh));
      }
    }
    if (radii.size() >= 2) {
      // least-squares exponent of log w(B(x,r)) against log r
      double sx = 0, sy = 0, sxx = 0, sxy = 0;
      const double m = static_cast<double>(radii.size());
      for (std::size_t i = 0; i < radii.size(); ++i) {
        const double lx = std::log(radii[i]), ly = std::log(vols[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
      }
      const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
      slope_min = std::min(slope_min, slope);
      slope_max = std::max(slope_max, slope);
    }
  }

  behavior.C = beh_max / beh_min;
  behavior.worst_ratio = beh_max;
  behavior.pass = std::isfinite(behavior.C) && beh_min > 0.0;
  behavior.extra = {{"band_low", beh_min}, {"band_high", beh_max}};

  doubling.C = dbl_max;
  doubling.worst_ratio = dbl_max;
  doubling.pass = std::isfinite(dbl_max) && dbl_max <= std::pow(2.0, nh) * (1.0 + 1e-6);
  doubling.extra = {{"two_to_hom_dim", std::pow(2.0, nh)}};

  growth.C = std::max(1.0 / grow_low, grow_high);
  growth.worst_ratio = growth.C;
  const double slack = 1e-2;
  growth.pass = std::isfinite(growth.C) && slope_min >= n - slack && slope_max <= nh + slack;
  growth.extra = {{"lower_ratio_min", grow_low},
                  {"upper_ratio_max", grow_high},
                  {"slope_min", slope_min},
                  {"slope_max", slope_max},
                  {"N", n},
                  {"hom_dim", nh}};
  return {behavior, doubling, growth};
}

}  // namespace dunkl
