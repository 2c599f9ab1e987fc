#include "dunkl/poisson.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <numbers>
#include <tuple>

namespace dunkl {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
const double kInvSqrtPi = 1.0 / std::sqrt(std::numbers::pi);

// Bound on the part of pi^{-1/2} int e^{-u} u^{-1/2} |1-2u|^lin h_{t^2/4u} du outside [ulo, uhi],
// from h_s <= c_k^{-1} (2s)^{-N/2} exp(-d^2/4s).
struct Tail {
  double lower, upper;
};

Tail tail_bound(const HeatKernel& h, double t, double d, double ulo, double uhi, bool lin) {
  const double n1 = 0.5 * (h.hom_dim() + 1.0), a = 1.0 + d * d / (t * t);
  const double P = kInvSqrtPi / h.c_k() * std::pow(2.0 / (t * t), 0.5 * h.hom_dim());
  Tail out{P * std::pow(ulo, n1) / n1, 0.0};
  if (lin) out.lower *= 1.0 + 2.0 * ulo;
  out.upper = P * std::tgamma(n1) * std::pow(a, -n1) * boost::math::gamma_q(n1, a * uhi);
  if (lin) out.upper += 2.0 * P * std::tgamma(n1 + 1.0) * std::pow(a, -n1 - 1.0) * boost::math::gamma_q(n1 + 1.0, a * uhi);
  return out;
}

struct Nodes {
  std::vector<double> u, g;  // g = pi^{-1/2} e^{-u} u^{1/2} f(u) h_{t^2/4u}
  long first = 0;            // index of u.front() on the grid i * step
};

template <class F>
Nodes sample(const HeatKernel& h, double t, const Vec& x, const Vec& y, double ulo, double uhi, double step, F&& factor) {
  Nodes n;
  n.first = static_cast<long>(std::floor(std::log(ulo) / step));
  const long last = static_cast<long>(std::ceil(std::log(uhi) / step));
  for (long i = n.first; i <= last; ++i) {
    const double u = std::exp(static_cast<double>(i) * step);
    const double lh = h.log_value(t * t / (4.0 * u), x, y);
    n.u.push_back(u);
    n.g.push_back(kInvSqrtPi * std::exp(-u + 0.5 * std::log(u) + lh) * factor(u));
  }
  return n;
}

struct Sums {
  double fine = 0, coarse = 0, scale = 0;
};

Sums sums(const Nodes& n, double step) {
  Sums s;
  for (std::size_t i = 0; i < n.g.size(); ++i) {
    s.fine += step * n.g[i];
    s.scale += step * std::abs(n.g[i]);
    if ((n.first + static_cast<long>(i)) % 2 == 0) s.coarse += 2.0 * step * n.g[i];
  }
  return s;
}

struct Built {
  SubordinationQuadrature rule;
  double value = 0.0;  // integral with the factor applied
};

Built build(const HeatKernel& h, double t, const Vec& x, const Vec& y, double tol, bool lin) {
  if (!(t > 0.0)) throw DomainError("Poisson kernel needs t > 0");
  if (!(tol > 0.0)) throw DomainError("tolerance must be positive");
  const double d = orbit_distance(h.system(), x, y);
  auto factor = [lin](double u) { return lin ? 1.0 - 2.0 * u : 1.0; };

  double ulo = 1e-6, uhi = 40.0, step = 0.25;
  Tail tb{};
  Sums s;
  for (int iter = 0;; ++iter) {
    s = sums(sample(h, t, x, y, ulo, uhi, step, factor), step);
    tb = tail_bound(h, t, d, ulo, uhi, lin);
    const double budget = 0.025 * tol * s.scale;
    if (tb.lower <= budget && tb.upper <= budget) break;
    if (iter == 40) throw BudgetExceeded("subordination tails did not meet the tolerance", s.fine);
    if (tb.lower > budget) ulo *= 1e-2;
    if (tb.upper > budget) uhi *= 1.5;
  }
  Nodes n;
  for (int level = 0;; ++level) {
    step *= 0.5;
    n = sample(h, t, x, y, ulo, uhi, step, factor);
    s = sums(n, step);
    if (std::abs(s.fine - s.coarse) <= tol * s.scale) break;
    if (level == 6) throw BudgetExceeded("subordination rule did not settle under node doubling", s.fine);
  }

  Built b;
  b.value = s.fine;
  auto& r = b.rule;
  r.t = t;
  r.x = x;
  r.y = y;
  r.step = step;
  r.u = n.u;
  for (double u : n.u) r.weight.push_back(kInvSqrtPi * step * std::exp(-u) * std::sqrt(u));
  r.split = static_cast<std::size_t>(std::upper_bound(r.u.begin(), r.u.end(), r.u0) - r.u.begin());
  r.tail_bound = tb.lower + tb.upper;
  r.doubling_change = s.scale > 0.0 ? std::abs(s.fine - s.coarse) / s.scale : 0.0;
  r.value = lin ? 0.0 : s.fine;
  return b;
}

}  // namespace

SubordinationQuadrature subordination_quadrature(const HeatKernel& h, double t, const Vec& x, const Vec& y,
                                                 double tol) {
  return build(h, t, x, y, tol, false).rule;
}

double poisson_kernel(const HeatKernel& h, double t, const Vec& x, const Vec& y, double tol) {
  return build(h, t, x, y, tol, false).value;
}

double q_t_kernel(const HeatKernel& h, double t, const Vec& x, const Vec& y, double tol) {
  // d/dt p_t = t^{-1} pi^{-1/2} int e^{-u} (1 - 2u) h_{t^2/4u} u^{-1/2} du
  return build(h, t, x, y, tol, true).value / t;
}

// ---------------------------------------------------------------- sweeps

PoissonSweep PoissonSweep::refined() const {
  PoissonSweep r = *this;
  r.points = 2 * points - 1;
  r.t_per_octave = 2 * t_per_octave;
  return r;
}

const std::vector<std::string>& poisson_estimate_ids() {
  static const std::vector<std::string> ids{"poisson_up", "poisson_dtdy", "poisson_new", "poisson_dim1", "q_bound"};
  return ids;
}

namespace {

struct Worst {
  double log_ratio = -kInf;
  Vec x, y;
  double t = 0.0;
};

struct PoissonSweepResult {
  Worst main, log_free;
  std::vector<Worst> per_time;
  std::vector<double> times;
  double max_tail = 0.0, max_doubling = 0.0;
};

void keep(Worst& w, double lr, const Vec& x, const Vec& y, double t) {
  if (std::isnan(lr)) lr = kInf;
  if (lr > w.log_ratio || w.x.size() == 0) w = {lr, x, y, t};
}

HeatSweep grid_of(const PoissonSweep& sw) {
  HeatSweep g;
  g.lo = sw.lo;
  g.hi = sw.hi;
  g.points = sw.points;
  g.extra_points = sw.extra_points;
  g.t_min = sw.t_min;
  g.t_max = sw.t_max;
  g.t_per_octave = sw.t_per_octave;
  return g;
}

// Heat kernel tables on a shared log-time grid, one row per axis and coordinate pair.
class AxisTables {
 public:
  AxisTables(const HeatKernel& h, const std::vector<double>& s) : s_(s) {
    for (double k : h.system().axis_k()) axes_.emplace_back(RootSystem::a1_product({k}));
  }

  const std::vector<double>& log_h(int j, double x, double y) {
    auto key = std::make_tuple(j, x, y);
    auto it = log_.find(key);
    if (it != log_.end()) return it->second;
    std::vector<double> row(s_.size());
    const auto& a = axes_[static_cast<std::size_t>(j)];
    for (std::size_t i = 0; i < s_.size(); ++i) row[i] = a.log_value(s_[i], vec({x}), vec({y}));
    return log_.emplace(key, std::move(row)).first->second;
  }

  const std::vector<double>& dy_ratio(int j, double x, double y) {
    auto key = std::make_tuple(j, x, y);
    auto it = dy_.find(key);
    if (it != dy_.end()) return it->second;
    std::vector<double> row(s_.size());
    const auto& a = axes_[static_cast<std::size_t>(j)];
    for (std::size_t i = 0; i < s_.size(); ++i)
      row[i] = a.derivative_ratio(DerivSpec{0, -1, 0}, s_[i], vec({x}), vec({y}));
    return dy_.emplace(key, std::move(row)).first->second;
  }

 private:
  std::vector<double> s_;
  std::deque<HeatKernel> axes_;
  std::map<std::tuple<int, double, double>, std::vector<double>> log_, dy_;
};

PoissonSweepResult run_poisson_sweep(const HeatKernel& h, const std::string& id, const PoissonSweep& sw) {
  const auto& rs = h.system();
  const int n = rs.dim();
  const auto grid = grid_of(sw);
  const auto pts = grid.lattice(n);
  const auto times = grid.times();

  std::vector<std::pair<Vec, Vec>> pairs;
  for (const auto& x : pts)
    for (const auto& y : pts) pairs.push_back({x, y});
  for (const auto& p : sw.mirror_points)
    if (p.size() == n) pairs.push_back({p, -p});

  const bool dtdy = id == "poisson_dtdy";
  const bool qb = id == "q_bound";
  const int m = dtdy ? sw.deriv.m : (qb ? 1 : 0);
  const int b = dtdy ? sw.deriv.y_axis : -1;

  // shared grid in sigma = log s, s = t^2/(4u), indices aligned so even ones form the coarse rule
  const double umax = 150.0, umin = 1e-16;
  const long i0 = static_cast<long>(std::floor(std::log(sw.t_min * sw.t_min / (4.0 * umax)) / sw.step));
  const long i1 = static_cast<long>(std::ceil(std::log(sw.t_max * sw.t_max / (4.0 * umin)) / sw.step));
  std::vector<double> s;
  for (long i = i0; i <= i1; ++i) s.push_back(std::exp(static_cast<double>(i) * sw.step));
  const double smin = s.front(), smax = s.back();
  AxisTables tables(h, s);

  // per time: weights for p, and for the (1-2u)/t factor of d/dt
  std::vector<std::vector<double>> wp(times.size()), wq(times.size());
  std::vector<std::size_t> lo_idx(times.size()), hi_idx(times.size());
  for (std::size_t ti = 0; ti < times.size(); ++ti) {
    const double t = times[ti];
    wp[ti].resize(s.size());
    wq[ti].resize(s.size());
    lo_idx[ti] = s.size();
    hi_idx[ti] = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      const double u = t * t / (4.0 * s[i]);
      const double w = u > 745.0 ? 0.0 : kInvSqrtPi * sw.step * std::exp(-u) * std::sqrt(u);
      wp[ti][i] = w;
      wq[ti][i] = w * (1.0 - 2.0 * u) / t;
      if (w > 0.0) {
        lo_idx[ti] = std::min(lo_idx[ti], i);
        hi_idx[ti] = i;
      }
    }
  }

  PoissonSweepResult res;
  res.times = times;
  res.per_time.assign(times.size(), Worst{});
  std::vector<double> G(s.size()), D(s.size());
  for (const auto& [x, y] : pairs) {
    std::fill(G.begin(), G.end(), 0.0);
    for (int j = 0; j < n; ++j) {
      const auto& row = tables.log_h(j, x(j), y(j));
      for (std::size_t i = 0; i < s.size(); ++i) G[i] += row[i];
    }
    for (double& g : G) g = std::exp(g);
    if (b >= 0) {
      const auto& r = tables.dy_ratio(b, x(b), y(b));
      for (std::size_t i = 0; i < s.size(); ++i) D[i] = G[i] * r[i];
    }
    const double d = orbit_distance(rs, x, y);
    const double dist = (x - y).norm();

    for (std::size_t ti = 0; ti < times.size(); ++ti) {
      const double t = times[ti];
      const auto& w = wp[ti];
      const auto& wl = m > 0 ? wq[ti] : wp[ti];
      const auto& F = b >= 0 ? D : G;
      double p = 0, pc = 0, v = 0, vc = 0, vs = 0;
      for (std::size_t i = lo_idx[ti]; i <= hi_idx[ti] && i < s.size(); ++i) {
        p += w[i] * G[i];
        v += wl[i] * F[i];
        vs += std::abs(wl[i] * F[i]);
        if ((i0 + static_cast<long>(i)) % 2 == 0) {
          pc += 2.0 * w[i] * G[i];
          vc += 2.0 * wl[i] * F[i];
        }
      }
      const auto tb = tail_bound(h, t, d, t * t / (4.0 * smax), t * t / (4.0 * smin), false);
      res.max_tail = std::max(res.max_tail, (tb.lower + tb.upper) / p);
      res.max_doubling = std::max(res.max_doubling, std::abs(p - pc) / p);
      if (m > 0 || b >= 0) {
        res.max_doubling = std::max(res.max_doubling, std::abs(v - vc) / vs);
        if (b < 0) {
          const auto tq = tail_bound(h, t, d, t * t / (4.0 * smax), t * t / (4.0 * smin), true);
          res.max_tail = std::max(res.max_tail, (tq.lower + tq.upper) / (t * vs));
        }
      }

      const double lp = std::log(p);
      const double lvol = std::log(h.V(x, y, d + t));
      double lhs = lp, rhs = 0.0;
      if (id == "poisson_up") {
        rhs = -lvol + std::log(t / (t + d));
      } else if (dtdy) {
        lhs = std::log(std::abs(v));
        rhs = lp - (m + (b >= 0 ? 1.0 : 0.0)) * std::log(t + d) + (m > 0 ? std::log1p(d / t) : 0.0);
      } else if (qb) {
        lhs = std::log(std::abs(t * v));
        rhs = lp;
      } else {
        rhs = std::log(t) - lvol + std::log(d + t) - std::log(dist * dist + t * t);
        if (id == "poisson_dim1") {
          keep(res.log_free, lhs - rhs, x, y, t);
          rhs += std::log(std::log1p((dist + t) / (d + t)));
        }
      }
      keep(res.main, lhs - rhs, x, y, t);
      keep(res.per_time[ti], lhs - rhs, x, y, t);
    }
  }
  return res;
}

nlohmann::json poisson_sweep_json(const PoissonSweep& sw, int dim) {
  nlohmann::json j;
  j["lattice"] = {{"lo", sw.lo}, {"hi", sw.hi}, {"points_per_axis", sw.points}, {"dim", dim}};
  j["extra_points"] = sw.extra_points.size();
  j["mirror_points"] = nlohmann::json::array();
  for (const auto& p : sw.mirror_points) j["mirror_points"].push_back(vec_to_json(p));
  j["t"] = {{"min", sw.t_min}, {"max", sw.t_max}, {"per_octave", sw.t_per_octave}};
  j["deriv"] = {{"m", sw.deriv.m}, {"y_axis", sw.deriv.y_axis}};
  j["max_ratio"] = sw.max_ratio;
  j["stability"] = sw.stability;
  j["quadrature_step"] = sw.step;
  return j;
}

}  // namespace

EstimateCertificate certify_poisson_estimate(const HeatKernel& h, const std::string& id, const PoissonSweep& sweep) {
  const auto& ids = poisson_estimate_ids();
  if (std::find(ids.begin(), ids.end(), id) == ids.end()) throw InputError("unknown Poisson estimate '" + id + "'");
  if (id == "poisson_dtdy" && (sweep.deriv.m < 0 || sweep.deriv.m > 1 || sweep.deriv.x_axis >= 0 ||
                               sweep.deriv.y_axis >= h.dim()))
    throw DomainError("Poisson derivatives limited to m <= 1 and one y derivative");

  PoissonSweep sw = sweep;
  if (id == "poisson_dim1" && h.dim() == 1 && sw.mirror_points.empty()) sw.mirror_points.push_back(vec({1.0}));

  EstimateCertificate cert;
  cert.id = id;
  cert.system = h.system().name();
  cert.domain = poisson_sweep_json(sw, h.dim());

  const auto base = run_poisson_sweep(h, id, sw);
  PoissonSweepResult fine;
  if (sw.refine) fine = run_poisson_sweep(h, id, sw.refined());

  CandidateResult c;
  c.dilation = 1.0;
  c.sup_base = std::exp(base.main.log_ratio);
  c.finite = std::isfinite(c.sup_base) && c.sup_base <= sw.max_ratio;
  c.stable = c.finite;
  if (sw.refine) {
    c.sup_refined = std::exp(fine.main.log_ratio);
    c.finite = c.finite && std::isfinite(c.sup_refined) && c.sup_refined <= sw.max_ratio;
    c.stable = c.finite && std::abs(c.sup_refined - c.sup_base) <= sw.stability * c.sup_refined;
  }
  cert.candidates.push_back(c);

  const auto& src = sw.refine ? fine : base;
  cert.C = std::exp(src.main.log_ratio);
  cert.worst_ratio = cert.C;
  cert.worst_x = src.main.x;
  cert.worst_y = src.main.y;
  cert.worst_t = src.main.t;
  for (const auto& w : base.per_time) cert.curve.push_back({w.t, w.x, w.y, std::exp(w.log_ratio)});

  const double tail = std::max(base.max_tail, fine.max_tail), dbl = std::max(base.max_doubling, fine.max_doubling);
  cert.extra["quadrature"] = {{"max_relative_tail", tail}, {"max_doubling_change", dbl}};
  const bool quad_ok = tail <= sw.quad_tol && dbl <= sw.quad_tol;

  bool applies = true;
  if (id == "poisson_new") applies = h.dim() >= 2;
  if (id == "poisson_dim1") applies = h.dim() == 1;
  cert.extra["applies"] = applies;

  if (id == "poisson_dim1") {
    cert.extra["log_free_sup"] = std::exp(src.log_free.log_ratio);
    auto probes = nlohmann::json::array();
    for (const auto& p : sw.mirror_points) {
      if (p.size() != h.dim()) continue;
      const Vec q = -p;
      const double t = sw.probe_t;
      const double val = poisson_kernel(h, t, p, q);
      const double d = orbit_distance(h.system(), p, q), dist = (p - q).norm();
      const double free = t / h.V(p, q, d + t) * (d + t) / (dist * dist + t * t);
      const double with_log = free * std::log1p((dist + t) / (d + t));
      probes.push_back({{"x", vec_to_json(p)},
                        {"y", vec_to_json(q)},
                        {"t", t},
                        {"ratio_log", val / with_log},
                        {"ratio_log_free", val / free},
                        {"factor", with_log / free}});
    }
    cert.extra["probes"] = probes;
  }

  cert.pass = c.finite && c.stable && quad_ok && applies;
  if (!cert.pass) {
    if (!applies) cert.extra["reason"] = "estimate stated for a different dimension";
    else if (!quad_ok) cert.extra["reason"] = "subordination quadrature outside tolerance";
    else cert.extra["reason"] = "ratio not finite or not stable under refinement";
  }
  return cert;
}

}  // namespace dunkl
