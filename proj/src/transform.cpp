#include "dunkl/transform.hpp"

#include "dunkl/dunkl_kernel.hpp"
#include "dunkl/quadrature.hpp"

#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <thread>

namespace dunkl {

namespace {

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
  const std::size_t workers = std::max(1u, std::min(8u, std::thread::hardware_concurrency()));
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += workers) body(i);
    });
  for (auto& t : pool) t.join();
}

double axis_constant(double k) { return std::pow(2.0, 2.0 * k + 0.5) * std::tgamma(k + 0.5); }

// Nonnegative half of an axis rule.
AxisRule half_rule(double k, double radius, double panel, int order) {
  AxisRule r;
  r.k = k;
  const int panels = std::max(1, static_cast<int>(std::ceil(radius / panel - 1e-12)));
  const double h = radius / panels;
  const double dens = std::pow(2.0, k);
  for (int p = 0; p < panels; ++p) {
    const double a = p * h, b = a + h;
    if (p == 0 && k > 0.0) {
      Rule g = gauss_power(order, 2.0 * k, a, b);
      for (std::size_t i = 0; i < g.nodes.size(); ++i) {
        r.nodes.push_back(g.nodes[i]);
        r.weights.push_back(dens * g.weights[i]);
      }
      continue;
    }
    Rule g = gauss_legendre(order, a, b);
    for (std::size_t i = 0; i < g.nodes.size(); ++i) {
      r.nodes.push_back(g.nodes[i]);
      r.weights.push_back(dens * std::pow(g.nodes[i], 2.0 * k) * g.weights[i]);
    }
  }
  return r;
}

// Multiply every axis-d fibre of data by m (n x n).
void apply_axis(std::vector<std::complex<double>>& data, const std::vector<std::size_t>& shape, int d,
                const Eigen::MatrixXcd& m) {
  std::size_t outer = 1, inner = 1;
  for (int i = 0; i < d; ++i) outer *= shape[i];
  for (std::size_t i = d + 1; i < shape.size(); ++i) inner *= shape[i];
  const auto n = static_cast<Eigen::Index>(shape[d]);
  using RowMat = Eigen::Matrix<std::complex<double>, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  for (std::size_t o = 0; o < outer; ++o) {
    Eigen::Map<RowMat> block(data.data() + o * shape[d] * inner, n, static_cast<Eigen::Index>(inner));
    RowMat tmp = m * block;
    block = tmp;
  }
}

// Weighted kernel matrix of an axis rule, cached by its nodes.
std::shared_ptr<const Eigen::MatrixXcd> kernel_matrix(const AxisRule& ax) {
  static std::mutex mu;
  static std::map<std::pair<double, std::vector<double>>, std::shared_ptr<const Eigen::MatrixXcd>> cache;
  auto key = std::make_pair(ax.k, ax.nodes);
  {
    std::lock_guard lock(mu);
    if (auto it = cache.find(key); it != cache.end()) return it->second;
  }
  const auto n = static_cast<Eigen::Index>(ax.nodes.size()), h = n / 2;
  // nodes are mirrored, so E(-i x_i x_j) on the positive quadrant determines the rest
  Eigen::MatrixXcd e(n, n);
  for (Eigen::Index j = h; j < n; ++j)
    for (Eigen::Index i = j; i < n; ++i) {
      const auto v = rank_one_imag(ax.k, ax.nodes[i] * ax.nodes[j]);
      e(i, j) = e(j, i) = e(n - 1 - i, n - 1 - j) = e(n - 1 - j, n - 1 - i) = v;
      e(n - 1 - i, j) = e(j, n - 1 - i) = e(i, n - 1 - j) = e(n - 1 - j, i) = std::conj(v);
    }
  const double c = axis_constant(ax.k);
  for (Eigen::Index i = 0; i < n; ++i) e.col(i) *= ax.weights[i] / c;
  auto m = std::make_shared<const Eigen::MatrixXcd>(std::move(e));
  std::lock_guard lock(mu);
  if (cache.size() > 16) cache.clear();
  cache.emplace(std::move(key), m);
  return m;
}

std::vector<std::size_t> shape_of(const TransformGrid& g) {
  std::vector<std::size_t> s;
  for (const auto& a : g.axes) s.push_back(a.nodes.size());
  return s;
}

void check_decay(const SampledFunction& f, double tail_tol) {
  const auto& g = f.grid;
  double peak = 0.0, edge = 0.0;
  for (std::size_t i = 0; i < f.values.size(); ++i) {
    const double v = std::abs(f.values[i]);
    peak = std::max(peak, v);
    const Vec p = g.point(i);
    if (p.cwiseAbs().maxCoeff() > 0.9 * g.radius) edge = std::max(edge, v);
  }
  if (peak > 0.0 && edge > tail_tol * peak)
    throw TailBoundError("sampled function does not decay inside the transform window");
}

void flip(SampledFunction& f) {
  // value at -x: symmetric nodes, so reverse each axis index
  const auto shape = shape_of(f.grid);
  std::vector<std::complex<double>> out(f.values.size());
  const int dim = static_cast<int>(shape.size());
  for (std::size_t i = 0; i < f.values.size(); ++i) {
    std::size_t rem = i, j = 0, stride = 1;
    std::vector<std::size_t> idx(dim);
    for (int d = dim - 1; d >= 0; --d) {
      idx[d] = rem % shape[d];
      rem /= shape[d];
    }
    for (int d = dim - 1; d >= 0; --d) {
      j += (shape[d] - 1 - idx[d]) * stride;
      stride *= shape[d];
    }
    out[j] = f.values[i];
  }
  f.values = std::move(out);
}

}  // namespace

AxisRule make_axis_rule(double k, double radius, double panel, int order) {
  AxisRule half = half_rule(k, radius, panel, order);
  AxisRule r;
  r.k = k;
  for (std::size_t i = half.nodes.size(); i-- > 0;) {
    r.nodes.push_back(-half.nodes[i]);
    r.weights.push_back(half.weights[i]);
  }
  r.nodes.insert(r.nodes.end(), half.nodes.begin(), half.nodes.end());
  r.weights.insert(r.weights.end(), half.weights.begin(), half.weights.end());
  return r;
}

TransformGrid TransformGrid::make(const RootSystem& rs, double radius, double panel, int order) {
  if (!rs.is_product()) throw UnsupportedSystem("transform grids need a rank-one or product system");
  if (!(radius > 0.0 && panel > 0.0 && order > 0)) throw DomainError("bad transform grid parameters");
  TransformGrid g;
  g.radius = radius;
  g.panel = panel;
  g.order = order;
  for (double k : rs.axis_k()) g.axes.push_back(make_axis_rule(k, radius, panel, order));
  return g;
}

std::size_t TransformGrid::size() const {
  std::size_t n = 1;
  for (const auto& a : axes) n *= a.nodes.size();
  return n;
}

Vec TransformGrid::point(std::size_t flat) const {
  Vec p(dim());
  for (int d = dim() - 1; d >= 0; --d) {
    const auto n = axes[d].nodes.size();
    p(d) = axes[d].nodes[flat % n];
    flat /= n;
  }
  return p;
}

double TransformGrid::weight(std::size_t flat) const {
  double w = 1.0;
  for (int d = dim() - 1; d >= 0; --d) {
    const auto n = axes[d].nodes.size();
    w *= axes[d].weights[flat % n];
    flat /= n;
  }
  return w;
}

SampledFunction sample(const TransformGrid& grid, const std::function<double(const Vec&)>& f) {
  SampledFunction s{grid, {}};
  s.values.resize(grid.size());
  for (std::size_t i = 0; i < s.values.size(); ++i) s.values[i] = f(grid.point(i));
  return s;
}

SampledFunction dunkl_transform(const SampledFunction& f, double tail_tol) {
  check_decay(f, tail_tol);
  SampledFunction out = f;
  const auto shape = shape_of(f.grid);
  for (int d = 0; d < f.grid.dim(); ++d) {
    const auto& ax = f.grid.axes[d];
    apply_axis(out.values, shape, d, *kernel_matrix(ax));
  }
  return out;
}

SampledFunction inverse_dunkl_transform(const SampledFunction& g, double tail_tol) {
  SampledFunction out = dunkl_transform(g, tail_tol);
  flip(out);
  return out;
}

double l2_norm(const SampledFunction& f) {
  double s = 0.0;
  for (std::size_t i = 0; i < f.values.size(); ++i) s += f.grid.weight(i) * std::norm(f.values[i]);
  return std::sqrt(s);
}

double integral(const SampledFunction& f) {
  double s = 0.0;
  for (std::size_t i = 0; i < f.values.size(); ++i) s += f.grid.weight(i) * f.values[i].real();
  return s;
}

SampledFunction dunkl_convolve(const SampledFunction& f, const SampledFunction& g, double tail_tol) {
  if (f.values.size() != g.values.size()) throw DomainError("convolution needs a common grid");
  SampledFunction ff = dunkl_transform(f, tail_tol), fg = dunkl_transform(g, tail_tol);
  double ck = 1.0;
  for (const auto& a : f.grid.axes) ck *= axis_constant(a.k);
  for (std::size_t i = 0; i < ff.values.size(); ++i) ff.values[i] *= ck * fg.values[i];
  return inverse_dunkl_transform(ff, tail_tol);
}

RadialTranslator::RadialTranslator(const RootSystem& rs, RadialProfile profile, Options opt)
    : rs_(rs), profile_(std::move(profile)), opt_(opt) {
  if (!rs.is_product()) throw UnsupportedSystem("spectral translation needs a rank-one or product system");
  if (!(opt.support > 0.0) || !std::isfinite(opt.support)) throw InputError("radial profile needs a finite support radius");
  k_ = rs.axis_k();
  hom_dim_ = rs.hom_dim();
  for (double k : k_) ck_ *= axis_constant(k);

  // xi rule shared by all axes only when multiplicities agree; keep one per system
  xi_rule_ = half_rule(k_[0], opt.xi_max, opt.xi_panel, opt.order);
  for (double k : k_)
    if (k != k_[0]) throw UnsupportedSystem("spectral translation expects equal multiplicities on all axes");

  // radial nodes carry r^{N_hom - 1} F(r) and the Gaussian normalisation
  const double norm = std::pow(2.0, 0.5 * hom_dim_ - 1.0) * std::tgamma(0.5 * hom_dim_);
  const double h = opt.support / opt.profile_panels;
  for (int p = 0; p < opt.profile_panels; ++p) {
    const double a = p * h, b = a + h;
    Rule g = p == 0 ? gauss_power(opt.order, hom_dim_ - 1.0, a, b) : gauss_legendre(opt.order, a, b);
    for (std::size_t i = 0; i < g.nodes.size(); ++i) {
      const double r = g.nodes[i];
      const double dens = p == 0 ? 1.0 : std::pow(r, hom_dim_ - 1.0);
      r_nodes_.push_back(r);
      r_weights_.push_back(g.weights[i] * dens * profile_(r) / norm);
    }
  }

  std::vector<double> at;
  if (rs.dim() == 1) {
    at = xi_rule_.nodes;
  } else {
    const double top = opt.xi_max * std::sqrt(static_cast<double>(rs.dim())) * 1.001;
    const int n = static_cast<int>(std::ceil(top / 0.02)) + 1;
    spline_h_ = top / (n - 1);
    for (int i = 0; i < n; ++i) at.push_back(i * spline_h_);
  }
  std::vector<double> vals(at.size());
  parallel_for(at.size(), [&](std::size_t i) { vals[i] = transform(at[i]); });
  (rs.dim() == 1 ? f_hat_ : spline_) = std::move(vals);
}

double RadialTranslator::transform(double s) const {
  const double nu = 0.5 * hom_dim_ - 1.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < r_nodes_.size(); ++i) sum += r_weights_[i] * normalized_bessel_j(nu, r_nodes_[i] * s);
  return sum;
}

double RadialTranslator::axis_factor(int j, double xi, double x, double y) const {
  const double k = k_[j];
  const double a = normalized_bessel_j(k - 0.5, xi * x) * normalized_bessel_j(k - 0.5, xi * y);
  const double b = normalized_bessel_j(k + 0.5, xi * x) * normalized_bessel_j(k + 0.5, xi * y);
  return a - xi * xi * x * y / ((2.0 * k + 1.0) * (2.0 * k + 1.0)) * b;
}

double RadialTranslator::translate(const Vec& x, const Vec& y) const {
  const int n = rs_.dim();
  const auto& nodes = xi_rule_.nodes;
  const auto& w = xi_rule_.weights;
  if (n == 1) {
    double s = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) s += w[i] * f_hat_[i] * axis_factor(0, nodes[i], x(0), y(0));
    return 2.0 * s / ck_;
  }
  if (n != 2) throw UnsupportedSystem("spectral translation implemented for N <= 2");
  std::vector<double> p0(nodes.size()), p1(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    p0[i] = w[i] * axis_factor(0, nodes[i], x(0), y(0));
    p1[i] = w[i] * axis_factor(1, nodes[i], x(1), y(1));
  }
  boost::math::interpolators::cardinal_cubic_b_spline<double> sp(spline_.begin(), spline_.end(), 0.0,
                                                                 spline_h_);
  double s = 0.0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < nodes.size(); ++j) row += p1[j] * sp(std::hypot(nodes[i], nodes[j]));
    s += p0[i] * row;
  }
  return 4.0 * s / ck_;
}

namespace {

struct MuContext {
  const std::vector<double>* k;
  const RadialProfile* profile;
  const Vec* x;
  const Vec* y;
  double support2;
  double tol;
  double abs_tol;
  std::vector<double> min_tail;  // smallest possible contribution of axes >= j
};

// density in s given 1 + s and 1 - s
double mu_density(double k, double sp, double sm) {
  const double c = std::exp(std::lgamma(k + 0.5) - std::lgamma(k) - std::lgamma(0.5));
  return c * sp * std::pow(std::max(sp * sm, 0.0), k - 1.0);
}

double mu_recurse(const MuContext& m, std::size_t j, double acc) {
  const std::size_t n = m.k->size();
  if (j == n) return acc <= m.support2 ? (*m.profile)(std::sqrt(std::max(acc, 0.0))) : 0.0;
  const auto i = static_cast<Eigen::Index>(j);
  const double xj = (*m.x)(i), yj = (*m.y)(i), kj = (*m.k)[j];
  const double base = acc + xj * xj + yj * yj, b = 2.0 * xj * yj;
  if (kj == 0.0 || b == 0.0) return mu_recurse(m, j + 1, base - (kj == 0.0 ? b : 0.0));
  // keep s where base - b s + (later minimum) <= support^2
  double lo = -1.0, hi = 1.0;
  if (std::isfinite(m.support2)) {
    const double cut = (base + m.min_tail[j + 1] - m.support2) / b;
    if (b > 0.0) lo = std::max(lo, cut);
    else hi = std::min(hi, cut);
  }
  if (!(lo < hi)) return 0.0;
  auto f = [&](double s, double da, double db) {
    const double sp = lo == -1.0 ? da : 1.0 + s, sm = hi == 1.0 ? db : 1.0 - s;
    return mu_density(kj, sp, sm) * mu_recurse(m, j + 1, base - b * s);
  };
  return integrate_singular(f, lo, hi, m.tol, m.abs_tol).value;
}

}  // namespace

double translation_kernel_mu(const RootSystem& rs, const RadialProfile& profile, const Vec& x,
                             const Vec& y, double support, double tol) {
  if (!rs.is_product()) throw UnsupportedSystem("the translation measure is explicit only for rank-one and product systems");
  // mu is a probability measure: tol * sup |profile| bounds what a negligible piece can add
  double scale = 0.0;
  if (std::isfinite(support))
    for (int i = 0; i <= 64; ++i) scale = std::max(scale, std::abs(profile(support * i / 64.0)));
  MuContext m{&rs.axis_k(), &profile, &x, &y, support * support, tol, tol * scale, {}};
  const std::size_t n = rs.axis_k().size();
  m.min_tail.assign(n + 1, 0.0);
  for (std::size_t j = n; j-- > 0;) {
    const auto i = static_cast<Eigen::Index>(j);
    const double d = std::abs(x(i)) - std::abs(y(i));
    m.min_tail[j] = m.min_tail[j + 1] + (rs.axis_k()[j] == 0.0 ? (x(i) - y(i)) * (x(i) - y(i)) : d * d);
  }
  return mu_recurse(m, 0, 0.0);
}

double radial_support_bound_A(const Vec& x, const Vec& y, const Vec& eta) {
  const double r = x.squaredNorm() + y.squaredNorm() - 2.0 * y.dot(eta);
  if (r < -1e-12) throw DomainError("negative radicand in A(x, y, eta)");
  return std::sqrt(std::max(r, 0.0));
}

double radial_support_bound_A_alt(const Vec& x, const Vec& y, const Vec& eta) {
  const double r = x.squaredNorm() - eta.squaredNorm() + (y - eta).squaredNorm();
  if (r < -1e-12) throw DomainError("negative radicand in A(x, y, eta)");
  return std::sqrt(std::max(r, 0.0));
}

}  // namespace dunkl
