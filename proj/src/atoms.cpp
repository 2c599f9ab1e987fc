#include "dunkl/atoms.hpp"

#include "dunkl/transform.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <set>

namespace dunkl {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double l1_of(const WeightedGridFunction& f) {
  double s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) s += std::abs(f.value(i)) * f.mass(i);
  return s;
}

WeightedGridFunction scaled(const WeightedGridFunction& f, double c) {
  auto v = f.values();
  for (double& x : v) x *= c;
  return f.with_values(std::move(v));
}

WeightedGridFunction zero_like(const WeightedGridFunction& f) {
  return f.with_values(std::vector<double>(f.size(), 0.0));
}

void add_to(std::vector<double>& acc, const WeightedGridFunction& f, double c) {
  for (std::size_t i = 0; i < f.size(); ++i) acc[i] += c * f.value(i);
}

double half_diagonal(const WeightedGridFunction& f) { return 0.5 * f.cell_size().norm(); }

nlohmann::json num(double x) {
  if (std::isfinite(x)) return x;
  return x > 0 ? "inf" : (x < 0 ? "-inf" : "nan");
}

}  // namespace

// ---------------------------------------------------------------- regions and atom checks

double Region::excess(const Vec& x) const {
  const double d = kind == Kind::Ball ? (x - center).norm() : (x - center).lpNorm<Eigen::Infinity>();
  return std::max(0.0, d - radius);
}

double Region::measure(const WeightFunction& w) const {
  if (kind == Kind::Ball) return w.ball_volume(center, radius, QuadSettings{1e-11, 0.0, 30}).value;
  const Vec r = Vec::Constant(center.size(), radius);
  if (w.system().is_product()) {
    double p = 1.0;
    for (int j = 0; j < center.size(); ++j) p *= w.axis_primitive(j, center(j) + radius) - w.axis_primitive(j, center(j) - radius);
    return p;
  }
  return w.box_mass(center - r, center + r, QuadSettings{1e-11, 0.0, 30});
}

double Region::grid_mass(const WeightedGridFunction& f) const {
  const double eps = 1e-12 * (1.0 + radius);
  double s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i)
    if (excess(f.center(i)) <= eps) s += f.mass(i);
  return s;
}

nlohmann::json Region::to_json() const {
  std::vector<double> c(center.data(), center.data() + center.size());
  if (kind == Kind::Ball) return {{"kind", "ball"}, {"center", c}, {"radius", radius}};
  return {{"kind", "cube"}, {"center", c}, {"side", 2.0 * radius}};
}

nlohmann::json CWAtomReport::to_json() const {
  return {{"region", region.to_json()},
          {"q", num(q)},
          {"support_ok", support_ok},
          {"support_excess", support_excess},
          {"norm", norm},
          {"size_bound", size_bound},
          {"size_ok", size_ok},
          {"integral", integral},
          {"l1", l1},
          {"cancellation_ok", cancellation_ok},
          {"multiple", num(multiple())},
          {"pass", pass}};
}

CWAtomReport validate_cw_atom(const WeightedGridFunction& a, const Region& region, double q, double tol) {
  if (!(q > 1.0)) throw InputError("atom exponent q must lie in (1, inf]");
  CWAtomReport rep;
  rep.region = region;
  rep.q = q;
  rep.tol = tol;
  const double slack = region.kind == Region::Kind::Ball ? half_diagonal(a) : 0.5 * a.cell_size().maxCoeff();
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a.value(i) != 0.0) rep.support_excess = std::max(rep.support_excess, region.excess(a.center(i)) - slack);
  rep.support_ok = rep.support_excess <= 1e-12 * (1.0 + region.radius);
  rep.support_excess = std::max(rep.support_excess, 0.0);

  rep.norm = a.norm(q);
  const double wb = region.measure(a.weight());
  rep.size_bound = std::isinf(q) ? 1.0 / wb : std::pow(wb, 1.0 / q - 1.0);
  rep.size_ok = rep.norm <= (1.0 + tol) * rep.size_bound;

  rep.integral = a.integral();
  rep.l1 = l1_of(a);
  rep.cancellation_ok = std::abs(rep.integral) <= tol * rep.l1;
  rep.pass = rep.support_ok && rep.size_ok && rep.cancellation_ok;
  return rep;
}

// ---------------------------------------------------------------- Psi

namespace {
double bump(double u) { return u < 1.0 ? std::exp(-1.0 / (1.0 - u * u)) : 0.0; }
}  // namespace

PsiProfile::PsiProfile(double hom_dim) : hom_(hom_dim) {
  // radial moments: int rho^{N-1} (.) drho over u = 4 rho in [0, 1]
  QuadSettings q{1e-14, 0.0, 40};
  const double m2 = integrate([&](double u) { return std::pow(u, hom_ + 1.0) * bump(u); }, 0.0, 1.0, {0.5}, q).value;
  const double m0 = integrate([&](double u) { return std::pow(u, hom_ - 1.0) * bump(u); }, 0.0, 1.0, {0.5}, q).value;
  beta_ = m2 / m0;
}

double PsiProfile::operator()(double rho) const {
  const double u = 4.0 * rho;
  return u < 1.0 ? (u * u - beta_) * bump(u) : 0.0;
}

PsiKernel::PsiKernel(const RootSystem& rs, int order) : rs_(rs), psi_(rs.hom_dim()) {
  if (!rs.is_product()) throw UnsupportedSystem("Psi_t(x, y) needs a rank-one or product system");
  if (rs.dim() == 1) {
    k_ = rs.axis_k()[0];
    if (k_ > 0.0) {
      c_ = std::exp(std::lgamma(k_ + 0.5) - std::lgamma(k_) - std::lgamma(0.5));
      below_ = gauss_power(order, k_ - 1.0, 0.0, 1.0);
      above_ = gauss_power(order, k_, 0.0, 1.0);
    }
  }
}

// 1D: int psi_t(rho) dmu(s) with rho^2 = x^2 + y^2 - 2xys, written as an integral in rho
double PsiKernel::rank_one(double t, double x, double y) const {
  const double R = 0.25 * t;
  if (k_ == 0.0) {
    const double d = std::abs(x - y);
    return d < R ? psi_.at(t, d) : 0.0;
  }
  const double b = 2.0 * x * y;
  if (b == 0.0) {
    const double d = std::hypot(x, y);
    return d < R ? psi_.at(t, d) : 0.0;
  }
  // rho in [rmin, rf]: density D^alpha E^beta times a smooth factor, D = rho - rmin, E = rf - rho
  const double ax = std::abs(x), ay = std::abs(y), ab = std::abs(b);
  const double rmin = std::abs(ax - ay), rf = ax + ay, rmax = std::min(R, rf);
  if (!(rmin < rmax)) return 0.0;
  const double alpha = b > 0.0 ? k_ - 1.0 : k_, beta = b > 0.0 ? k_ : k_ - 1.0;
  const Rule& ra = b > 0.0 ? below_ : above_;
  const Rule& rb = b > 0.0 ? above_ : below_;
  auto smooth = [&](double rho) {
    const double n = (rho + rmin) / ab, f = (rf + rho) / ab;
    const double dens = b > 0.0 ? c_ * std::pow(f, k_) * std::pow(n, k_ - 1.0) : c_ * std::pow(n, k_) * std::pow(f, k_ - 1.0);
    return dens * (2.0 * rho / ab) * psi_.at(t, rho);
  };
  // D-weighted rule on [rmin, hi]; E is bounded away from 0 there or the piece ends before rf
  auto lower = [&](double hi) {
    const double L = hi - rmin, scale = std::pow(L, alpha + 1.0);
    double v = 0.0;
    for (std::size_t i = 0; i < ra.nodes.size(); ++i) {
      const double rho = rmin + L * ra.nodes[i];
      v += ra.weights[i] * scale * std::pow(rf - rho, beta) * smooth(rho);
    }
    return v;
  };
  if (rmax < rf) return lower(rmax);
  const double mid = 0.5 * (rmin + rf), L = rf - mid, scale = std::pow(L, beta + 1.0);
  double v = lower(mid);
  for (std::size_t i = 0; i < rb.nodes.size(); ++i) {
    const double rho = rf - L * rb.nodes[i];
    v += rb.weights[i] * scale * std::pow(rho - rmin, alpha) * smooth(rho);
  }
  return v;
}

double PsiKernel::operator()(double t, const Vec& x, const Vec& y) const {
  if (!(t > 0.0)) throw DomainError("Psi_t needs t > 0");
  if (rs_.dim() == 1) return rank_one(t, x(0), y(0));
  const PsiProfile& p = psi_;
  return translation_kernel_mu(rs_, [&](double rho) { return p.at(t, rho); }, x, y, 0.25 * t, 1e-10);
}

// ---------------------------------------------------------------- tent atoms

TentAtom TentAtom::indicator(const WeightFunction& w, const Vec& lo, const Vec& hi, int level, const Vec& y0,
                             double r, double t_min, int per_octave) {
  if (!(r > 0.0) || !(t_min > 0.0) || t_min >= r || per_octave < 1) throw InputError("tent needs 0 < t_min < r");
  TentAtom A;
  A.y0 = y0;
  A.r = r;
  A.log_step = std::log(2.0) / per_octave;
  WeightedGridFunction base(w, lo, hi, level);
  for (int i = 0;; ++i) {
    const double t = t_min * std::exp2(static_cast<double>(i) / per_octave);
    if (t >= r) break;
    auto s = zero_like(base);
    for (std::size_t c = 0; c < s.size(); ++c)
      if ((s.center(c) - y0).norm() + t <= r) s.value(c) = 1.0;
    A.t.push_back(t);
    A.slices.push_back(std::move(s));
  }
  const double n2 = A.t2_norm_squared();
  if (!(n2 > 0.0)) throw InputError("tent contains no grid cells; refine the grid or lower t_min");
  const double wb = Region::ball(y0, r).measure(w);
  const double c = 1.0 / std::sqrt(n2 * wb);
  for (auto& s : A.slices) s = scaled(s, c);
  return A;
}

double TentAtom::t2_norm_squared() const {
  double s = 0.0;
  for (const auto& sl : slices) s += log_step * std::pow(sl.norm(2.0), 2);
  return s;
}

nlohmann::json TentAtom::check(double tol) const {
  double excess = 0.0;
  for (std::size_t i = 0; i < slices.size(); ++i) {
    const auto& s = slices[i];
    const double slack = s.cell_size().norm();
    for (std::size_t c = 0; c < s.size(); ++c)
      if (s.value(c) != 0.0) excess = std::max(excess, (s.center(c) - y0).norm() + t[i] - r - slack);
  }
  const double wb = slices.empty() ? 0.0 : Region::ball(y0, r).measure(slices.front().weight());
  const double n2 = t2_norm_squared();
  const bool support_ok = excess <= 1e-12;
  const bool size_ok = n2 <= (1.0 + tol) / wb;
  return {{"support_ok", support_ok},
          {"support_excess", std::max(excess, 0.0)},
          {"t2_norm_squared", n2},
          {"bound", 1.0 / wb},
          {"size_ok", size_ok},
          {"levels", t.size()},
          {"pass", support_ok && size_ok}};
}

// ---------------------------------------------------------------- pi_Psi

namespace {

struct Points {
  std::vector<Vec> p;
  std::vector<double> w;
};

// composite Gauss points of one cell carrying its dw-mass
Points cell_points(const WeightedGridFunction& f, std::size_t c, double piece, const Rule& gl) {
  const int n = f.dim();
  const Vec lo = f.cell_lo(c), h = f.cell_size();
  std::vector<std::vector<double>> nodes(static_cast<std::size_t>(n)), weights(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) {
    const long m = std::max<long>(1, static_cast<long>(std::ceil(h(j) / piece - 1e-9)));
    const double step = h(j) / static_cast<double>(m);
    for (long a = 0; a < m; ++a)
      for (std::size_t q = 0; q < gl.nodes.size(); ++q) {
        const double z = lo(j) + step * (static_cast<double>(a) + gl.nodes[q]);
        nodes[static_cast<std::size_t>(j)].push_back(z);
        weights[static_cast<std::size_t>(j)].push_back(step * gl.weights[q] * f.weight().axis_weight(j, z));
      }
  }
  Points out;
  std::vector<std::size_t> idx(static_cast<std::size_t>(n), 0);
  double total = 0.0;
  while (true) {
    Vec p(n);
    double w = 1.0;
    for (int j = 0; j < n; ++j) {
      p(j) = nodes[static_cast<std::size_t>(j)][idx[static_cast<std::size_t>(j)]];
      w *= weights[static_cast<std::size_t>(j)][idx[static_cast<std::size_t>(j)]];
    }
    out.p.push_back(p);
    out.w.push_back(w);
    total += w;
    int j = 0;
    for (; j < n; ++j) {
      auto& i = idx[static_cast<std::size_t>(j)];
      if (++i < nodes[static_cast<std::size_t>(j)].size()) break;
      i = 0;
    }
    if (j == n) break;
  }
  // the Gauss rule misses the |z|^{2k} cusp on a cell touching a wall; keep the exact mass
  if (total > 0.0)
    for (double& w : out.w) w *= f.mass(c) / total;
  return out;
}

// cells meeting some ball B(sigma q, R)
std::vector<std::size_t> cells_near(const WeightedGridFunction& f, const std::vector<Mat>& group, const Vec& q, double R) {
  std::set<std::size_t> out;
  const int n = f.dim();
  const Vec h = f.cell_size();
  for (const auto& g : group) {
    const Vec c = g * q;
    std::vector<long> lo(static_cast<std::size_t>(n)), hi(static_cast<std::size_t>(n));
    bool empty = false;
    for (int j = 0; j < n; ++j) {
      const auto jj = static_cast<std::size_t>(j);
      lo[jj] = std::max<long>(0, static_cast<long>(std::floor((c(j) - R - f.lo()(j)) / h(j))));
      hi[jj] = std::min<long>(f.per_axis() - 1, static_cast<long>(std::floor((c(j) + R - f.lo()(j)) / h(j))));
      if (lo[jj] > hi[jj]) empty = true;
    }
    if (empty) continue;
    std::vector<long> m = lo;
    while (true) {
      out.insert(f.flat_index(m));
      int j = 0;
      for (; j < n; ++j) {
        auto jj = static_cast<std::size_t>(j);
        if (++m[jj] <= hi[jj]) break;
        m[jj] = lo[jj];
      }
      if (j == n) break;
    }
  }
  return {out.begin(), out.end()};
}

}  // namespace

WeightedGridFunction pi_psi_apply(const PsiKernel& psi, const TentAtom& A, const PiPsiOptions& opt) {
  if (A.slices.empty()) throw InputError("tent atom has no levels");
  const auto& grid = A.slices.front();
  const auto& group = psi.system().weyl_group();
  const Rule gl = gauss_legendre(opt.gauss, 0.0, 1.0);
  std::vector<double> acc(grid.size(), 0.0);
  for (std::size_t li = 0; li < A.t.size(); ++li) {
    const double t = A.t[li], R = 0.25 * t, piece = opt.piece_fraction * t;
    const auto& slice = A.slices[li];
    std::vector<Points> xcache(grid.size());
    std::vector<char> have(grid.size(), 0);
    for (std::size_t yc = 0; yc < slice.size(); ++yc) {
      if (slice.value(yc) == 0.0) continue;
      const auto ypts = cell_points(slice, yc, piece, gl);
      for (std::size_t qi = 0; qi < ypts.p.size(); ++qi) {
        const Vec& q = ypts.p[qi];
        const double cy = A.log_step * slice.value(yc) * ypts.w[qi];
        for (std::size_t xc : cells_near(grid, group, q, R)) {
          if (!have[xc]) {
            xcache[xc] = cell_points(grid, xc, piece, gl);
            have[xc] = 1;
          }
          const auto& xp = xcache[xc];
          double s = 0.0;
          for (std::size_t pi = 0; pi < xp.p.size(); ++pi) s += psi(t, xp.p[pi], q) * xp.w[pi];
          acc[xc] += cy * s;
        }
      }
    }
  }
  for (std::size_t c = 0; c < grid.size(); ++c) acc[c] = grid.mass(c) > 0.0 ? acc[c] / grid.mass(c) : 0.0;
  return grid.with_values(std::move(acc));
}

// ---------------------------------------------------------------- pointwise and L2 sides

nlohmann::json LemmaReport::to_json() const {
  return {{"skipped", skipped},
          {"reason", reason},
          {"gap", gap},
          {"pointwise_ratio", num(pointwise_ratio)},
          {"l2_on_ball", l2_on_ball},
          {"l2_ratio", num(l2_ratio)},
          {"pass", pass}};
}

LemmaReport check_lemma_bounds(const PsiKernel& psi, const TentAtom& A, const Mat& sigma,
                               const WeightedGridFunction& g, const PiPsiOptions& opt) {
  LemmaReport rep;
  const Vec sy = sigma * A.y0;
  rep.gap = (sy - A.y0).norm();
  if (!(rep.gap > 4.0 * A.r)) {
    rep.skipped = true;
    rep.reason = "gap |sigma(y0) - y0| = " + std::to_string(rep.gap) + " does not exceed 4r = " + std::to_string(4.0 * A.r);
    return rep;
  }
  const auto& grid = A.slices.front();
  const auto& group = psi.system().weyl_group();
  const Region target = Region::ball(sy, A.r);
  const Rule gl = gauss_legendre(opt.gauss, 0.0, 1.0);

  double worst = 0.0;
  for (std::size_t li = 0; li < A.t.size(); ++li) {
    const double t = A.t[li];
    const auto& slice = A.slices[li];
    std::vector<Points> ypts;
    std::vector<double> yval;
    for (std::size_t yc = 0; yc < slice.size(); ++yc)
      if (slice.value(yc) != 0.0) {
        ypts.push_back(cell_points(slice, yc, opt.piece_fraction * t, gl));
        yval.push_back(slice.value(yc));
      }
    for (std::size_t xc = 0; xc < grid.size(); ++xc) {
      const Vec x = grid.center(xc);
      if (!target.contains(x)) continue;
      double a = 0.0;
      for (std::size_t i = 0; i < ypts.size(); ++i)
        for (std::size_t q = 0; q < ypts[i].p.size(); ++q) a += psi(t, x, ypts[i].p[q]) * ypts[i].w[q] * yval[i];
      double m = 0.0;
      for (const auto& s : group) m += hardy_littlewood_maximal(slice, s * x).value;
      const double rhs = t * t / (rep.gap * rep.gap) * m;
      if (a == 0.0) continue;
      worst = std::max(worst, rhs > 0.0 ? std::abs(a) / rhs : kInf);
    }
  }
  rep.pointwise_ratio = worst;

  double l2 = 0.0;
  for (std::size_t c = 0; c < g.size(); ++c)
    if (target.contains(g.center(c))) l2 += g.value(c) * g.value(c) * g.mass(c);
  rep.l2_on_ball = std::sqrt(l2);
  const double wb = Region::ball(A.y0, A.r).measure(grid.weight());
  rep.l2_ratio = rep.l2_on_ball * std::sqrt(wb) * rep.gap * rep.gap / (A.r * A.r);
  rep.pass = std::isfinite(rep.pointwise_ratio) && std::isfinite(rep.l2_ratio);
  return rep;
}

LemmaReport check_lemma_bounds(const PsiKernel& psi, const TentAtom& A, const Mat& sigma, const PiPsiOptions& opt) {
  const Vec sy = sigma * A.y0;
  if (!((sy - A.y0).norm() > 4.0 * A.r)) return check_lemma_bounds(psi, A, sigma, A.slices.front(), opt);
  return check_lemma_bounds(psi, A, sigma, pi_psi_apply(psi, A, opt), opt);
}

LemmaReport check_lemma_bounds(const PsiKernel& psi, const TentAtom& A, const PiPsiOptions& opt) {
  const auto& group = psi.system().weyl_group();
  std::size_t best = 0;
  double gap = -1.0;
  for (std::size_t i = 0; i < group.size(); ++i) {
    const double d = (group[i] * A.y0 - A.y0).norm();
    if (d > gap) {
      gap = d;
      best = i;
    }
  }
  if (!(gap > 4.0 * A.r)) {
    LemmaReport rep;
    rep.skipped = true;
    rep.gap = std::max(gap, 0.0);
    rep.reason = group.size() == 1 ? "trivial reflection group: no sigma with |sigma(y0) - y0| > 4r"
                                   : "no sigma with |sigma(y0) - y0| > 4r";
    return rep;
  }
  return check_lemma_bounds(psi, A, group[best], opt);
}

// ---------------------------------------------------------------- decompositions

bool Decomposition::all_valid() const {
  return std::all_of(entries.begin(), entries.end(), [](const DecompositionEntry& e) { return e.report.pass; });
}

nlohmann::json Decomposition::to_json(const std::string& atom_stem) const {
  nlohmann::json list = nlohmann::json::array();
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    list.push_back({{"lambda", e.lambda},
                    {"coefficient", e.coefficient},
                    {"multiple", e.multiple},
                    {"q", num(e.q)},
                    {"region", e.region.to_json()},
                    {"kind", e.kind},
                    {"round", e.round},
                    {"atom", atom_stem + "_" + std::to_string(i)},
                    {"validation", e.report.to_json()}});
  }
  return {{"mode", mode},
          {"entries", list},
          {"residual_l1", residual_l1},
          {"reconstruction_l1", reconstruction_l1},
          {"coefficient_sum", coefficient_sum},
          {"all_valid", all_valid()},
          {"bookkeeping", bookkeeping}};
}

namespace {

// piece = multiple * atom, validated at q on region; pieces with norm <= floor stay in the residual
void emit(Decomposition& d, const WeightedGridFunction& piece, double coefficient, double q, const Region& region,
          const std::string& kind, int round, double tol, double floor) {
  const auto raw = validate_cw_atom(piece, region, q, tol);
  if (!(raw.norm > floor)) return;
  const double M = raw.multiple();
  DecompositionEntry e(scaled(piece, 1.0 / M));
  e.coefficient = coefficient;
  e.multiple = M;
  e.lambda = coefficient * M;
  e.q = q;
  e.region = region;
  e.kind = kind;
  e.round = round;
  e.report = validate_cw_atom(e.atom, region, q, tol);
  d.entries.push_back(std::move(e));
}

void finish(Decomposition& d, const WeightedGridFunction& input) {
  std::vector<double> sum(input.size(), 0.0);
  for (const auto& e : d.entries) add_to(sum, e.atom, e.lambda);
  add_to(sum, d.residual, 1.0);
  double rec = 0.0;
  for (std::size_t i = 0; i < input.size(); ++i) rec += std::abs(input.value(i) - sum[i]) * input.mass(i);
  d.reconstruction_l1 = rec;
  d.residual_l1 = l1_of(d.residual);
  d.coefficient_sum = 0.0;
  for (const auto& e : d.entries) d.coefficient_sum += std::abs(e.lambda);
}

WeightedGridFunction indicator_of(const WeightedGridFunction& f, const Region& B, double value) {
  auto out = zero_like(f);
  const double eps = 1e-12 * (1.0 + B.radius);
  for (std::size_t i = 0; i < f.size(); ++i)
    if (B.excess(f.center(i)) <= eps) out.value(i) = value;
  return out;
}

std::vector<double> vec_of(const Vec& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

Decomposition chain_decompose(const WeightedGridFunction& g, const Vec& y0, double r, const ChainOptions& opt) {
  const auto& rs = g.weight().system();
  if (y0.size() != g.dim() || !(r > 0.0)) throw InputError("chain decomposition needs y0 in the grid dimension and r > 0");
  // group images with the identity first; repeated images give empty E_j
  std::vector<Mat> group;
  const Mat id = Mat::Identity(g.dim(), g.dim());
  group.push_back(id);
  for (const auto& s : rs.weyl_group())
    if (!s.isApprox(id)) group.push_back(s);
  const std::size_t G = group.size();
  std::vector<Vec> centers;
  for (const auto& s : group) centers.push_back(s * y0);

  const double l1 = l1_of(g), integral = g.integral();
  if (std::abs(integral) > opt.tol * l1)
    throw InputError("input fails cancellation: |int g dw| = " + std::to_string(std::abs(integral)) +
                     " exceeds tol * ||g||_1 = " + std::to_string(opt.tol * l1));

  // E_j by first ball containing the cell center
  const double eps = 1e-12 * (1.0 + r);
  std::vector<WeightedGridFunction> pieces(G, zero_like(g));
  for (std::size_t c = 0; c < g.size(); ++c) {
    if (g.value(c) == 0.0) continue;
    std::size_t j = 0;
    while (j < G && (g.center(c) - centers[j]).norm() > r + eps) ++j;
    if (j == G)
      throw InputError("input is not supported on the orbit of B(y0, r): cell centered at " +
                       std::to_string(g.center(c)(0)) + " lies outside");
    pieces[j].value(c) = g.value(c);
  }

  const double wB = Region::ball(y0, r).grid_mass(g);
  if (!(wB > 0.0)) throw InputError("B(y0, r) contains no grid cells");
  Decomposition d(zero_like(g));
  d.mode = "chain";
  const double floor = 1e-12 * g.norm(2.0);
  auto final_atom = pieces[0];
  nlohmann::json orbit = nlohmann::json::array();
  double chain_sum = 0.0;
  for (std::size_t j = 0; j < G; ++j) {
    const double dist = (centers[j] - y0).norm();
    const bool in_I = j > 0 && dist >= 4.0 * r;
    const double norm2 = pieces[j].norm(2.0);
    const double allowed = opt.budget / std::sqrt(wB) * (in_I ? r * r / (dist * dist) : 1.0);
    if (norm2 > (1.0 + opt.tol) * allowed)
      throw InputError("L2 budget exceeded on the ball around sigma_" + std::to_string(j) + "(y0): ||g_j||_2 = " +
                       std::to_string(norm2) + " > " + std::to_string(allowed));
    nlohmann::json row = {{"j", j}, {"center", vec_of(centers[j])}, {"distance", dist}, {"in_I", in_I},
                          {"l2", norm2}};
    if (!in_I) {
      if (j > 0) add_to(final_atom.values(), pieces[j], 1.0);
      orbit.push_back(row);
      continue;
    }
    const double cj = pieces[j].integral();
    const auto mj = static_cast<long>(std::floor(dist / r));
    if (mj < 4) throw InputError("chain length below 4 for sigma_" + std::to_string(j));
    std::vector<Vec> xs;
    for (long n = 0; n <= mj; ++n)
      xs.push_back(centers[j] + static_cast<double>(n) / static_cast<double>(mj) * (y0 - centers[j]));
    xs.back() = y0;
    std::vector<WeightedGridFunction> chi;
    std::vector<double> W;
    for (const auto& x : xs) {
      const Region B = Region::ball(x, r);
      W.push_back(B.grid_mass(g));
      if (!(W.back() > 0.0)) throw InputError("a chain ball contains no grid cells");
      chi.push_back(indicator_of(g, B, 1.0 / W.back()));
    }
    double smin = kInf, smax = 0.0;
    for (long n = 0; n < mj; ++n) {
      const double s = (xs[static_cast<std::size_t>(n + 1)] - xs[static_cast<std::size_t>(n)]).norm();
      smin = std::min(smin, s);
      smax = std::max(smax, s);
    }
    const double scale = dist * dist / (r * r), coef = r * r / (dist * dist);
    // a_0 = (d/r)^2 (g_j - c_j chi_1 / w(B_1))
    auto a0 = pieces[j];
    add_to(a0.values(), chi[1], -cj);
    emit(d, scaled(a0, scale), coef, 2.0, Region::ball(xs[0], 4.0 * r), "local", 0, opt.tol, floor * scale);
    for (long n = 1; n < mj; ++n) {
      auto an = scaled(chi[static_cast<std::size_t>(n)], cj * scale);
      add_to(an.values(), chi[static_cast<std::size_t>(n + 1)], -cj * scale);
      emit(d, an, coef, 2.0, Region::ball(xs[static_cast<std::size_t>(n)], 4.0 * r), "chain", static_cast<int>(n),
           opt.tol, floor * scale);
    }
    // b_j joins the final atom
    add_to(final_atom.values(), chi.back(), cj);
    const double part = static_cast<double>(mj) * coef;
    chain_sum += part;
    row.update({{"c_j", cj},
                {"c_bound", opt.budget * coef},
                {"m_j", mj},
                {"coefficient_sum", part},
                {"spacing_min", smin},
                {"spacing_max", smax},
                {"spacing_ok", smin >= r * (1.0 - 1e-12) && smax <= 2.0 * r * (1.0 + 1e-12)}});
    orbit.push_back(row);
  }
  const double before = d.entries.size();
  emit(d, final_atom, 1.0, 2.0, Region::ball(y0, 16.0 * r), "final", 0, opt.tol, floor);
  const double final_multiple = d.entries.size() > before ? d.entries.back().multiple : 0.0;

  // residual: what the emitted pieces do not reproduce (arithmetic only)
  std::vector<double> sum(g.size(), 0.0);
  for (const auto& e : d.entries) add_to(sum, e.atom, e.lambda);
  for (std::size_t c = 0; c < g.size(); ++c) d.residual.value(c) = g.value(c) - sum[c];
  finish(d, g);
  d.bookkeeping = {{"group_order", G},
                   {"y0", vec_of(y0)},
                   {"r", r},
                   {"w_B", wB},
                   {"budget", opt.budget},
                   {"orbit", orbit},
                   {"chain_coefficient_sum", chain_sum},
                   {"chain_bound", static_cast<double>(G) / 4.0},
                   {"final_multiple", final_multiple},
                   {"final_l1", l1_of(final_atom)}};
  return d;
}

// ---------------------------------------------------------------- C1 and Calderon-Zygmund

namespace {

// dyadic cube in cell units
struct DCube {
  std::vector<long> lo;
  long side = 1;
};

template <class F>
void for_each_cell(const WeightedGridFunction& f, const DCube& q, F&& fn) {
  const std::size_t n = q.lo.size();
  std::vector<long> m = q.lo;
  while (true) {
    fn(f.flat_index(m));
    std::size_t j = 0;
    for (; j < n; ++j) {
      if (++m[j] < q.lo[j] + q.side) break;
      m[j] = q.lo[j];
    }
    if (j == n) break;
  }
}

std::vector<DCube> children(const DCube& q) {
  const std::size_t n = q.lo.size();
  std::vector<DCube> out;
  const long h = q.side / 2;
  for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
    DCube c{q.lo, h};
    for (std::size_t j = 0; j < n; ++j)
      if (mask & (std::size_t{1} << j)) c.lo[j] += h;
    out.push_back(std::move(c));
  }
  return out;
}

DCube locate_cube(const WeightedGridFunction& f, const Region& Q) {
  if (Q.kind != Region::Kind::Cube) throw InputError("the Calderon-Zygmund split needs a cube");
  const Vec h = f.cell_size();
  for (int j = 1; j < f.dim(); ++j)
    if (std::abs(h(j) - h(0)) > 1e-12 * h(0)) throw InputError("grid cells must be cubes");
  const double side = 2.0 * Q.radius / h(0);
  const auto s = std::lround(side);
  if (std::abs(side - static_cast<double>(s)) > 1e-9 || s < 1 || (s & (s - 1)) != 0)
    throw InputError("cube side is not a power-of-two number of cells");
  DCube q;
  q.side = s;
  for (int j = 0; j < f.dim(); ++j) {
    const double a = (Q.center(j) - Q.radius - f.lo()(j)) / h(0);
    const auto ia = std::lround(a);
    if (std::abs(a - static_cast<double>(ia)) > 1e-9 || ia < 0 || ia + s > f.per_axis())
      throw InputError("cube is not aligned with the grid or leaves the box");
    q.lo.push_back(ia);
  }
  return q;
}

Region region_of(const WeightedGridFunction& f, const DCube& q) {
  const double h = f.cell_size()(0);
  Vec lo(f.dim());
  for (int j = 0; j < f.dim(); ++j) lo(j) = f.lo()(j) + h * static_cast<double>(q.lo[static_cast<std::size_t>(j)]);
  return Region::cube(lo, h * static_cast<double>(q.side));
}

double cube_mass(const WeightedGridFunction& f, const DCube& q) {
  double s = 0.0;
  for_each_cell(f, q, [&](std::size_t c) { s += f.mass(c); });
  return s;
}

}  // namespace

C1Estimate estimate_C1(const WeightFunction& w, const std::vector<Region>& cubes) {
  C1Estimate e;
  for (const auto& Q : cubes) {
    if (Q.kind != Region::Kind::Cube) throw InputError("C1 sampling needs cubes");
    const double wq = Q.measure(w);
    const int n = static_cast<int>(Q.center.size());
    for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
      Vec lo = (Q.center.array() - Q.radius).matrix();
      for (int j = 0; j < n; ++j)
        if (mask & (std::size_t{1} << j)) lo(j) += Q.radius;
      const double ws = Region::cube(lo, Q.radius).measure(w);
      e.max_ratio = std::max(e.max_ratio, ws > 0.0 ? wq / ws : kInf);
      ++e.pairs;
    }
  }
  e.C1 = 1.1 * e.max_ratio;
  return e;
}

C1Estimate estimate_C1(const WeightFunction& w, const WeightedGridFunction& grid, const Region& Q) {
  (void)w;
  C1Estimate e;
  std::vector<DCube> stack{locate_cube(grid, Q)};
  while (!stack.empty()) {
    DCube q = stack.back();
    stack.pop_back();
    if (q.side < 2) continue;
    const double wq = cube_mass(grid, q);
    for (auto& c : children(q)) {
      const double wc = cube_mass(grid, c);
      e.max_ratio = std::max(e.max_ratio, wc > 0.0 ? wq / wc : kInf);
      ++e.pairs;
      stack.push_back(std::move(c));
    }
  }
  e.C1 = 1.1 * e.max_ratio;
  return e;
}

Decomposition cz_split(const WeightedGridFunction& a, const Region& Q, const CZOptions& opt) {
  const DCube top = locate_cube(a, Q);
  const Region Qr = region_of(a, top);
  const double wQ = cube_mass(a, top);

  // eq. (atom on a cube): support, size, cancellation
  const auto pre = validate_cw_atom(a, Qr, 2.0, opt.tol);
  double outside = 0.0;
  std::vector<char> inside(a.size(), 0);
  for_each_cell(a, top, [&](std::size_t c) { inside[c] = 1; });
  for (std::size_t c = 0; c < a.size(); ++c)
    if (!inside[c]) outside += std::abs(a.value(c));
  if (outside > 0.0 || a.norm(2.0) > (1.0 + opt.tol) / std::sqrt(wQ) || !pre.cancellation_ok)
    throw InputError("input is not a (1,2)-atom on the cube: support outside " + std::to_string(outside) +
                     ", ||a||_2 w(Q)^{1/2} = " + std::to_string(a.norm(2.0) * std::sqrt(wQ)) +
                     ", |int a dw| = " + std::to_string(std::abs(pre.integral)));

  double C1 = 0.0;
  std::size_t pairs = 0;
  if (opt.C1) {
    C1 = *opt.C1;
  } else {
    const auto est = estimate_C1(a.weight(), a, Qr);
    C1 = est.C1;
    pairs = est.pairs;
  }
  if (!std::isfinite(C1) || !(C1 > 1.0)) throw ConfigError("C1 estimate failed (" + std::to_string(C1) + ")");
  const double eps = 0.25 / std::sqrt(C1);
  const double C2 = (1.0 + std::sqrt(C1)) / eps;

  struct Item {
    double coef;
    WeightedGridFunction f;
    DCube q;
  };
  std::vector<Item> work;
  work.push_back({1.0, a, top});
  Decomposition d(zero_like(a));
  d.mode = "cz";
  nlohmann::json rounds = nlohmann::json::array();
  double worst_b = 0.0, worst_mass = 0.0, worst_stop = 0.0, lower_stop = kInf;
  bool contraction_ok = true;
  std::vector<double> mass_per_round;
  for (int round = 0; round < opt.rounds && !work.empty(); ++round) {
    std::vector<Item> next;
    double mass_in = 0.0, mass_out = 0.0, emitted = 0.0;
    std::size_t cubes = 0;
    for (const auto& it : work) {
      mass_in += it.coef;
      const double wq = cube_mass(it.f, it.q);
      const double lambda = 1.0 / (eps * eps * wq * wq);
      // parent-first scan for maximal dyadic cubes with |f|^2-average above lambda
      std::vector<DCube> stops;
      std::vector<DCube> stack{it.q};
      while (!stack.empty()) {
        DCube c = stack.back();
        stack.pop_back();
        double e2 = 0.0;
        const double wc = cube_mass(it.f, c);
        for_each_cell(it.f, c, [&](std::size_t i) { e2 += it.f.value(i) * it.f.value(i) * it.f.mass(i); });
        if (wc > 0.0 && e2 / wc > lambda) {
          worst_stop = std::max(worst_stop, e2 / (lambda * wc));
          lower_stop = std::min(lower_stop, e2 / (lambda * wc));
          stops.push_back(c);
        } else if (c.side > 1) {
          for (auto& ch : children(c)) stack.push_back(std::move(ch));
        }
      }
      std::sort(stops.begin(), stops.end(), [](const DCube& x, const DCube& y) { return x.lo < y.lo; });
      cubes += stops.size();

      auto b = it.f;
      double wsum = 0.0;
      for (const auto& c : stops) {
        const double wc = cube_mass(it.f, c);
        wsum += wc;
        double m = 0.0;
        for_each_cell(it.f, c, [&](std::size_t i) { m += it.f.value(i) * it.f.mass(i); });
        const double avg = c.side == 1 ? it.f.value(it.f.flat_index(c.lo)) : m / wc;
        auto piece = zero_like(it.f);
        for_each_cell(it.f, c, [&](std::size_t i) {
          b.value(i) = avg;
          piece.value(i) = it.f.value(i) - avg;
        });
        const double mu = piece.norm(2.0) * std::sqrt(wc);
        if (mu == 0.0) continue;
        mass_out += it.coef * mu;
        next.push_back({it.coef * mu, scaled(piece, 1.0 / mu), c});
      }
      worst_mass = std::max(worst_mass, wsum / (eps * eps * wq));
      const double Mb = b.norm(INFINITY) * wq;
      worst_b = std::max(worst_b, Mb);
      const std::size_t before = d.entries.size();
      emit(d, b, it.coef, INFINITY, region_of(a, it.q), "good", round, opt.tol, 1e-12 * it.f.norm(INFINITY));
      if (d.entries.size() > before) emitted += std::abs(d.entries.back().lambda);
    }
    mass_per_round.push_back(mass_in);
    const bool ok = mass_out <= 0.5 * mass_in;
    contraction_ok = contraction_ok && ok;
    rounds.push_back({{"round", round},
                      {"atoms_in", work.size()},
                      {"mass_in", mass_in},
                      {"stopping_cubes", cubes},
                      {"mass_out", mass_out},
                      {"contraction", mass_in > 0.0 ? mass_out / mass_in : 0.0},
                      {"contraction_ok", ok},
                      {"emitted_lambda", emitted}});
    work = std::move(next);
  }
  for (const auto& it : work) add_to(d.residual.values(), it.f, it.coef);
  finish(d, a);
  double geometric = 0.0;
  for (double m : mass_per_round) geometric += C2 * m;
  d.bookkeeping = {{"C1", C1},
                   {"C1_pairs", pairs},
                   {"epsilon", eps},
                   {"C2", C2},
                   {"lambda", 1.0 / (eps * eps * wQ * wQ)},
                   {"w_Q", wQ},
                   {"rounds", rounds},
                   {"rounds_requested", opt.rounds},
                   {"contraction_ok", contraction_ok},
                   {"max_good_multiple", worst_b},
                   {"good_bound_ok", worst_b <= C2 * (1.0 + 1e-12)},
                   {"max_stopping_mass_ratio", worst_mass},  // sum w(Q_j) / (eps^2 w(Q))
                   {"stopping_upper", worst_stop},           // lambda^{-1} int |a|^2 / w(Q_j) < C1
                   {"stopping_lower", std::isfinite(lower_stop) ? lower_stop : 0.0},
                   {"geometric_bound", geometric},
                   {"bound_2C2", 2.0 * C2},
                   {"residual_bound", work.empty() ? 0.0 : std::pow(0.5, static_cast<double>(opt.rounds))}};
  return d;
}

}  // namespace dunkl
