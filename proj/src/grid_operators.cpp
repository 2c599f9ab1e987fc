#include "dunkl/grid_operators.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <tuple>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>
#include <sstream>

namespace dunkl {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

// ---------------------------------------------------------------- grid functions

WeightedGridFunction::WeightedGridFunction(const WeightFunction& w, const Vec& lo, const Vec& hi, int level)
    : w_(w), lo_(lo), hi_(hi), level_(level) {
  const int n = static_cast<int>(lo.size());
  if (n != w.system().dim() || hi.size() != lo.size()) throw InputError("grid box does not match the system dimension");
  for (int j = 0; j < n; ++j)
    if (!(hi(j) > lo(j))) throw InputError("grid box must have positive extent");
  if (level < 0 || level * n > 24) throw InputError("grid level out of range");

  const std::size_t cells = std::size_t{1} << (level * n);
  values_.assign(cells, 0.0);
  masses_.assign(cells, 0.0);
  if (w.system().is_product()) {
    const long m = per_axis();
    std::vector<std::vector<double>> axis(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j)
      for (long i = 0; i < m; ++i) {
        const double a = lo(j) + (hi(j) - lo(j)) * static_cast<double>(i) / static_cast<double>(m);
        const double b = lo(j) + (hi(j) - lo(j)) * static_cast<double>(i + 1) / static_cast<double>(m);
        axis[static_cast<std::size_t>(j)].push_back(w.axis_primitive(j, b) - w.axis_primitive(j, a));
      }
    for (std::size_t c = 0; c < cells; ++c) {
      const auto mi = multi_index(c);
      double p = 1.0;
      for (int j = 0; j < n; ++j) p *= axis[static_cast<std::size_t>(j)][static_cast<std::size_t>(mi[static_cast<std::size_t>(j)])];
      masses_[c] = p;
    }
  } else {
    for (std::size_t c = 0; c < cells; ++c) masses_[c] = w.box_mass(cell_lo(c), cell_hi(c), QuadSettings{1e-10, 0.0, 30});
  }
}

WeightedGridFunction WeightedGridFunction::sample(const WeightFunction& w, const Vec& lo, const Vec& hi, int level,
                                                  const std::function<double(const Vec&)>& f) {
  WeightedGridFunction g(w, lo, hi, level);
  for (std::size_t i = 0; i < g.size(); ++i) g.values_[i] = f(g.center(i));
  return g;
}

Vec WeightedGridFunction::cell_size() const { return (hi_ - lo_) / static_cast<double>(per_axis()); }

std::vector<long> WeightedGridFunction::multi_index(std::size_t i) const {
  std::vector<long> m(static_cast<std::size_t>(dim()));
  for (int j = dim() - 1; j >= 0; --j) {
    m[static_cast<std::size_t>(j)] = static_cast<long>(i % static_cast<std::size_t>(per_axis()));
    i /= static_cast<std::size_t>(per_axis());
  }
  return m;
}

std::size_t WeightedGridFunction::flat_index(const std::vector<long>& m) const {
  std::size_t i = 0;
  for (long v : m) i = i * static_cast<std::size_t>(per_axis()) + static_cast<std::size_t>(v);
  return i;
}

Vec WeightedGridFunction::cell_lo(std::size_t i) const {
  const auto m = multi_index(i);
  Vec out(dim());
  for (int j = 0; j < dim(); ++j)
    out(j) = lo_(j) + (hi_(j) - lo_(j)) * static_cast<double>(m[static_cast<std::size_t>(j)]) / static_cast<double>(per_axis());
  return out;
}

Vec WeightedGridFunction::cell_hi(std::size_t i) const {
  const auto m = multi_index(i);
  Vec out(dim());
  for (int j = 0; j < dim(); ++j)
    out(j) = lo_(j) + (hi_(j) - lo_(j)) * static_cast<double>(m[static_cast<std::size_t>(j)] + 1) / static_cast<double>(per_axis());
  return out;
}

Vec WeightedGridFunction::center(std::size_t i) const { return 0.5 * (cell_lo(i) + cell_hi(i)); }

std::size_t WeightedGridFunction::locate(const Vec& x) const {
  std::vector<long> m(static_cast<std::size_t>(dim()));
  for (int j = 0; j < dim(); ++j) {
    if (x(j) < lo_(j) || x(j) > hi_(j)) return size();
    long v = static_cast<long>(std::floor((x(j) - lo_(j)) / (hi_(j) - lo_(j)) * static_cast<double>(per_axis())));
    m[static_cast<std::size_t>(j)] = std::clamp(v, 0L, per_axis() - 1);
  }
  return flat_index(m);
}

WeightedGridFunction WeightedGridFunction::with_values(std::vector<double> v) const {
  if (v.size() != size()) throw InputError("value count does not match the grid");
  WeightedGridFunction g = *this;
  g.values_ = std::move(v);
  return g;
}

WeightedGridFunction WeightedGridFunction::refined() const {
  WeightedGridFunction g(w_, lo_, hi_, level_ + 1);
  for (std::size_t i = 0; i < g.size(); ++i) {
    auto m = g.multi_index(i);
    for (long& v : m) v /= 2;
    g.values_[i] = values_[flat_index(m)];
  }
  return g;
}

double WeightedGridFunction::integral() const {
  double s = 0.0;
  for (std::size_t i = 0; i < size(); ++i) s += values_[i] * masses_[i];
  return s;
}

double WeightedGridFunction::total_mass() const {
  double s = 0.0;
  for (double m : masses_) s += m;
  return s;
}

double WeightedGridFunction::norm(double p) const {
  if (!(p >= 1.0)) throw DomainError("norm exponent must be >= 1");
  if (std::isinf(p)) {
    double m = 0.0;
    for (std::size_t i = 0; i < size(); ++i)
      if (masses_[i] > 0.0) m = std::max(m, std::abs(values_[i]));
    return m;
  }
  double s = 0.0;
  for (std::size_t i = 0; i < size(); ++i) s += std::pow(std::abs(values_[i]), p) * masses_[i];
  return std::pow(s, 1.0 / p);
}

bool WeightedGridFunction::support_box(Vec& lo, Vec& hi) const {
  bool any = false;
  for (std::size_t i = 0; i < size(); ++i) {
    if (values_[i] == 0.0) continue;
    const Vec a = cell_lo(i), b = cell_hi(i);
    if (!any) {
      lo = a;
      hi = b;
      any = true;
    } else {
      lo = lo.cwiseMin(a);
      hi = hi.cwiseMax(b);
    }
  }
  return any;
}

nlohmann::json root_system_to_json(const RootSystem& rs) {
  nlohmann::json j;
  j["name"] = rs.name();
  j["dim"] = rs.dim();
  if (rs.is_product()) {
    j["axis_k"] = rs.axis_k();
  } else {
    auto roots = nlohmann::json::array();
    for (const auto& r : rs.roots()) roots.push_back({{"vector", vec_to_json(r.vector)}, {"k", r.multiplicity}});
    j["roots"] = roots;
  }
  return j;
}

RootSystem root_system_from_json(const nlohmann::json& j) {
  if (j.contains("axis_k")) return RootSystem::a1_product(j.at("axis_k").get<std::vector<double>>());
  std::vector<Root> roots;
  for (const auto& r : j.at("roots")) roots.push_back({vec_from_json(r.at("vector")), r.at("k").get<double>()});
  return RootSystem::explicit_roots(j.at("dim").get<int>(), roots);
}

nlohmann::json WeightedGridFunction::header() const {
  nlohmann::json j;
  j["format"] = "weighted-grid-function";
  j["version"] = 1;
  j["system"] = root_system_to_json(w_.system());
  j["lo"] = vec_to_json(lo_);
  j["hi"] = vec_to_json(hi_);
  j["level"] = level_;
  j["cells"] = size();
  j["columns"] = {"index", "value", "mass"};
  return j;
}

void WeightedGridFunction::write(std::ostream& header_out, std::ostream& csv) const {
  header_out << header().dump(2) << "\n";
  csv << "index,value,mass\n";
  csv << std::setprecision(17);
  for (std::size_t i = 0; i < size(); ++i) csv << i << ',' << values_[i] << ',' << masses_[i] << '\n';
}

WeightedGridFunction WeightedGridFunction::read(std::istream& header_in, std::istream& csv) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(header_in);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("grid header is not valid JSON: ") + e.what());
  }
  if (j.value("format", "") != "weighted-grid-function") throw InputError("grid header has the wrong format tag");
  WeightedGridFunction g(WeightFunction(root_system_from_json(j.at("system"))), vec_from_json(j.at("lo")),
                         vec_from_json(j.at("hi")), j.at("level").get<int>());
  std::string line;
  if (!std::getline(csv, line) || line.rfind("index,value", 0) != 0) throw InputError("grid CSV lacks its header row");
  std::vector<bool> seen(g.size(), false);
  std::size_t row = 1;
  while (std::getline(csv, line)) {
    ++row;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string a, b;
    if (!std::getline(ls, a, ',') || !std::getline(ls, b, ',')) throw InputError("grid CSV row " + std::to_string(row) + " is malformed");
    std::size_t idx = 0;
    double v = 0.0;
    try {
      std::size_t used = 0;
      idx = std::stoul(a, &used);
      if (used != a.size()) throw std::invalid_argument(a);
      v = std::stod(b, &used);
      if (used != b.size()) throw std::invalid_argument(b);
    } catch (const std::exception&) {
      throw InputError("grid CSV row " + std::to_string(row) + " does not parse");
    }
    if (idx >= g.size() || seen[idx]) throw InputError("grid CSV row " + std::to_string(row) + " has a bad index");
    if (!std::isfinite(v)) throw InputError("grid CSV row " + std::to_string(row) + " has a non-finite value");
    seen[idx] = true;
    g.values_[idx] = v;
  }
  if (std::find(seen.begin(), seen.end(), false) != seen.end()) throw InputError("grid CSV is missing cells");
  return g;
}

void WeightedGridFunction::save(const std::string& stem) const {
  std::ofstream h(stem + ".json"), c(stem + ".csv");
  if (!h || !c) throw InputError("cannot write grid function to " + stem);
  write(h, c);
}

WeightedGridFunction WeightedGridFunction::load(const std::string& stem) {
  std::ifstream h(stem + ".json"), c(stem + ".csv");
  if (!h || !c) throw InputError("cannot open grid function " + stem + ".json/.csv");
  return read(h, c);
}

// ---------------------------------------------------------------- cones

ConeGrid ConeGrid::for_function(const WeightedGridFunction& f, const std::vector<Vec>& xs, int t_per_octave) {
  if (t_per_octave < 1) throw InputError("t_per_octave must be positive");
  ConeGrid c;
  Vec slo, shi;
  if (!f.support_box(slo, shi)) {
    slo = f.lo();
    shi = f.hi();
  }
  const double diam = (shi - slo).norm();
  double far = 0.0;
  for (const auto& x : xs) far = std::max(far, (x - x.cwiseMax(slo).cwiseMin(shi)).norm());
  const double t_min = f.cell_size().minCoeff();
  const double t_max = std::max(4.0 * diam + far, 2.0 * t_min);
  for (int i = 0;; ++i) {
    const double t = t_min * std::exp2(static_cast<double>(i) / t_per_octave);
    c.t.push_back(t);
    if (t >= t_max) break;
  }
  for (std::size_t i = 0; i < f.size(); ++i) c.y.push_back(f.center(i));
  for (const auto& x : xs) c.y.push_back(x);
  return c;
}

ConeGrid ConeGrid::refined() const {
  ConeGrid r = *this;
  r.t.clear();
  for (std::size_t i = 0; i < t.size(); ++i) {
    r.t.push_back(t[i]);
    if (i + 1 < t.size()) r.t.push_back(std::sqrt(t[i] * t[i + 1]));
  }
  return r;
}

// ---------------------------------------------------------------- heat maximal function

namespace {

// H_s f(y) = sum_c f_c int_cell h_s(y, z) dw(z) for a product system. The cell integrals
// factor over the axes; each 1D piece is integrated with 4-point Gauss rules on sub-intervals
// no longer than sqrt(s)/4 (the power rule on pieces ending at 0).
class CellHeat {
 public:
  CellHeat(const HeatKernel& h, const WeightedGridFunction& f) : f_(f) {
    const auto& rs = h.system();
    if (!rs.is_product()) throw DomainError("grid operators need a rank-one or product system");
    const int n = f.dim();
    for (int j = 0; j < n; ++j) {
      const double k = rs.axis_k()[static_cast<std::size_t>(j)];
      axes_.emplace_back(RootSystem::a1_product({k}));
      k_.push_back(k);
      power_.push_back(k > 0.0 ? gauss_power(4, 2.0 * k, 0.0, 1.0) : gauss_legendre(4, 0.0, 1.0));
    }
    gl_ = gauss_legendre(4, 0.0, 1.0);
    lo_idx_.assign(static_cast<std::size_t>(n), f.per_axis());
    hi_idx_.assign(static_cast<std::size_t>(n), -1);
    for (std::size_t i = 0; i < f.size(); ++i)
      if (f.value(i) != 0.0) {
        const auto mi = f.multi_index(i);
        for (int j = 0; j < n; ++j) {
          const auto jj = static_cast<std::size_t>(j);
          lo_idx_[jj] = std::min(lo_idx_[jj], mi[jj]);
          hi_idx_[jj] = std::max(hi_idx_[jj], mi[jj]);
        }
        cells_.push_back(mi);
        values_.push_back(f.value(i));
        l1_ += std::abs(f.value(i)) * f.mass(i);
      }
  }

  double l1() const { return l1_; }
  bool empty() const { return cells_.empty(); }

  double apply(double s, const Vec& y) {
    if (cells_.empty()) return 0.0;
    const int n = f_.dim();
    std::vector<const std::vector<double>*> rows(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) rows[static_cast<std::size_t>(j)] = &row(j, s, y(j));
    double v = 0.0;
    for (std::size_t c = 0; c < cells_.size(); ++c) {
      double p = values_[c];
      for (int j = 0; j < n && p != 0.0; ++j) {
        const auto jj = static_cast<std::size_t>(j);
        p *= (*rows[jj])[static_cast<std::size_t>(cells_[c][jj] - lo_idx_[jj])];
      }
      v += p;
    }
    return v;
  }

 private:
  const std::vector<double>& row(int j, double s, double y) {
    auto key = std::make_tuple(j, s, y);
    auto it = rows_.find(key);
    if (it != rows_.end()) return it->second;
    const auto jj = static_cast<std::size_t>(j);
    const double a0 = f_.lo()(j), dh = f_.cell_size()(j);
    std::vector<double> r;
    for (long i = lo_idx_[jj]; i <= hi_idx_[jj]; ++i)
      r.push_back(axis_integral(j, s, y, a0 + dh * static_cast<double>(i), a0 + dh * static_cast<double>(i + 1)));
    return rows_.emplace(key, std::move(r)).first->second;
  }

  // int_a^b h_s(y, z) 2^k |z|^{2k} dz for axis j
  double axis_integral(int j, double s, double y, double a, double b) const {
    const auto jj = static_cast<std::size_t>(j);
    auto dist = [&](double p) {
      const double lo = std::min(std::abs(a - p), std::abs(b - p));
      return (p >= a && p <= b) ? 0.0 : lo;
    };
    const double d = std::min(dist(y), dist(-y));
    if (d * d / (4.0 * s) > 60.0) return 0.0;
    if (a < 0.0 && b > 0.0) return axis_integral(j, s, y, a, 0.0) + axis_integral(j, s, y, 0.0, b);
    const double k = k_[jj];
    const auto& hk = axes_[jj];
    auto kern = [&](double z) { return std::exp(hk.log_value(s, vec({y}), vec({z}))); };
    const double len = b - a;
    const double piece = 0.25 * std::sqrt(s);
    const long n = std::min<long>(1L << 16, std::max<long>(1, static_cast<long>(std::ceil(len / piece))));
    const double step = len / static_cast<double>(n);
    const double w2k = std::pow(2.0, k);
    double v = 0.0;
    for (long p = 0; p < n; ++p) {
      const double l = a + step * static_cast<double>(p), r = l + step;
      if (k > 0.0 && (l == 0.0 || r == 0.0)) {
        // weight |z|^{2k} from the end at 0
        const double scale = std::pow(step, 2.0 * k + 1.0);
        const auto& pr = power_[jj];
        for (std::size_t q = 0; q < pr.nodes.size(); ++q) {
          const double z = l == 0.0 ? step * pr.nodes[q] : -step * pr.nodes[q];
          v += pr.weights[q] * scale * w2k * kern(z);
        }
      } else {
        for (std::size_t q = 0; q < gl_.nodes.size(); ++q) {
          const double z = l + step * gl_.nodes[q];
          v += gl_.weights[q] * step * w2k * std::pow(std::abs(z), 2.0 * k) * kern(z);
        }
      }
    }
    return v;
  }

  const WeightedGridFunction& f_;
  std::deque<HeatKernel> axes_;
  std::vector<double> k_;
  std::vector<Rule> power_;
  Rule gl_;
  std::vector<long> lo_idx_, hi_idx_;
  std::vector<std::vector<long>> cells_;
  std::vector<double> values_;
  double l1_ = 0.0;
  std::map<std::tuple<int, double, double>, std::vector<double>> rows_;
};

}  // namespace

std::vector<GridOperatorValue> nontangential_heat_maximal(const HeatKernel& h, const WeightedGridFunction& f,
                                                          const std::vector<Vec>& xs, const ConeGrid& cone) {
  CellHeat heat(h, f);
  std::vector<std::vector<double>> memo(cone.t.size(), std::vector<double>(cone.y.size(), std::nan("")));
  const double t_max = cone.t.empty() ? 0.0 : cone.t.back();
  std::vector<GridOperatorValue> out;
  for (const auto& x : xs) {
    GridOperatorValue v;
    v.lower_bound = true;
    v.y = x;
    for (std::size_t ti = 0; ti < cone.t.size(); ++ti) {
      const double t = cone.t[ti];
      for (std::size_t yi = 0; yi < cone.y.size(); ++yi) {
        if (!cone.in_cone(x, ti, yi)) continue;
        double& u = memo[ti][yi];
        if (std::isnan(u)) u = heat.apply(t * t, cone.y[yi]);
        if (std::abs(u) > v.value) {
          v.value = std::abs(u);
          v.t = t;
          v.y = cone.y[yi];
        }
      }
    }
    // |exp(t^2 Delta) f| <= ||f||_1 sup h_{t^2} <= ||f||_1 c_k^{-1} (2 t^2)^{-N/2} for every t beyond the cone
    v.truncation_bound = t_max > 0.0 ? heat.l1() / h.c_k() * std::pow(2.0 * t_max * t_max, -0.5 * h.hom_dim()) : kInf;
    v.resolution = {{"t_min", cone.t.empty() ? 0.0 : cone.t.front()},
                    {"t_max", t_max},
                    {"t_levels", cone.t.size()},
                    {"y_nodes", cone.y.size()},
                    {"cells", f.size()},
                    {"cell_rule", "4-point Gauss on pieces of length <= sqrt(s)/4"}};
    out.push_back(std::move(v));
  }
  return out;
}

GridOperatorValue nontangential_heat_maximal(const HeatKernel& h, const WeightedGridFunction& f, const Vec& x,
                                             const ConeGrid& cone) {
  return nontangential_heat_maximal(h, f, std::vector<Vec>{x}, cone).front();
}

// ---------------------------------------------------------------- Hardy-Littlewood

namespace {

GridOperatorValue hl_exact_1d(const WeightedGridFunction& f, double x) {
  const auto& w = f.weight();
  const long n = f.per_axis();
  const double lo = f.lo()(0), hi = f.hi()(0);
  std::vector<double> walls(static_cast<std::size_t>(n + 1));
  for (long i = 0; i <= n; ++i) walls[static_cast<std::size_t>(i)] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n);
  std::vector<double> cumA(static_cast<std::size_t>(n + 1), 0.0);
  for (long i = 0; i < n; ++i)
    cumA[static_cast<std::size_t>(i + 1)] = cumA[static_cast<std::size_t>(i)] + std::abs(f.value(static_cast<std::size_t>(i))) * f.mass(static_cast<std::size_t>(i));
  auto F = [&](double z) { return w.axis_primitive(0, z); };
  // integral of |f| and of dw over (-inf, z], measured from lo
  auto A = [&](double z) {
    if (z <= lo) return 0.0;
    if (z >= hi) return cumA.back();
    const long i = std::min(n - 1, static_cast<long>(std::floor((z - lo) / (hi - lo) * static_cast<double>(n))));
    const double a = walls[static_cast<std::size_t>(i)];
    return cumA[static_cast<std::size_t>(i)] + std::abs(f.value(static_cast<std::size_t>(i))) * (F(z) - F(a));
  };
  auto W = [&](double z) { return F(z) - F(lo); };

  std::vector<double> left{x}, right{x};
  for (double v : walls) {
    if (v < x) left.push_back(v);
    if (v > x) right.push_back(v);
  }
  GridOperatorValue out;
  out.lower_bound = false;
  // a degenerate interval at x: the Lebesgue value of the cell
  const std::size_t c = f.locate(vec({x}));
  if (c < f.size()) out.value = std::abs(f.value(c));
  out.y = vec({x});
  for (double a : left)
    for (double b : right) {
      if (!(b > a)) continue;
      const double m = W(b) - W(a);
      if (!(m > 0.0)) continue;
      const double avg = (A(b) - A(a)) / m;
      if (avg > out.value) {
        out.value = avg;
        out.y = vec({0.5 * (a + b)});
        out.radius = 0.5 * (b - a);
      }
    }
  out.resolution = {{"mode", "exact intervals"}, {"cells", f.size()},
                    {"cell_rule", "4-point Gauss on pieces of length <= sqrt(s)/4"}};
  return out;
}

}  // namespace

GridOperatorValue hardy_littlewood_maximal(const WeightedGridFunction& f, const Vec& x, const BallSweep& sweep) {
  if (x.size() != f.dim()) throw InputError("point dimension does not match the grid");
  if (f.dim() == 1 && sweep.exact_1d) return hl_exact_1d(f, x(0));

  const int n = f.dim();
  const double r_min = sweep.r_min > 0.0 ? sweep.r_min : f.cell_size().minCoeff();
  const double r_max = sweep.r_max > 0.0 ? sweep.r_max : (f.hi() - f.lo()).norm();
  std::vector<Vec> dirs;
  if (n == 2) {
    for (int i = 0; i < sweep.directions; ++i) {
      const double a = 2.0 * std::numbers::pi * i / sweep.directions;
      dirs.push_back(vec({std::cos(a), std::sin(a)}));
    }
  } else {
    for (int j = 0; j < n; ++j)
      for (double s : {-1.0, 1.0}) {
        Vec e = Vec::Zero(n);
        e(j) = s;
        dirs.push_back(e);
      }
  }
  GridOperatorValue out;
  out.lower_bound = true;
  out.y = x;
  for (int i = 0;; ++i) {
    const double r = r_min * std::exp2(static_cast<double>(i) / sweep.per_octave);
    if (r > r_max * (1.0 + 1e-12)) break;
    for (int q = 0; q < sweep.radial; ++q)
      for (std::size_t d = 0; d < (q == 0 ? 1 : dirs.size()); ++d) {
        const Vec y = x + r * (static_cast<double>(q) / sweep.radial) * dirs[d];
        double num = 0.0;
        for (std::size_t c = 0; c < f.size(); ++c)
          if (f.value(c) != 0.0 && (f.center(c) - y).norm() < r) num += std::abs(f.value(c)) * f.mass(c);
        const double den = f.weight().ball_volume(y, r, QuadSettings{1e-9, 0.0, 30}).value;
        if (den > 0.0 && num / den > out.value) {
          out.value = num / den;
          out.y = y;
          out.radius = r;
        }
      }
  }
  out.resolution = {{"mode", "ball sweep"}, {"r_min", r_min}, {"r_max", r_max}, {"per_octave", sweep.per_octave},
                    {"radial", sweep.radial}, {"directions", dirs.size()}};
  return out;
}

// ---------------------------------------------------------------- square function

std::vector<GridOperatorValue> square_function(const HeatKernel& h, const WeightedGridFunction& f,
                                               const std::vector<Vec>& xs, const ConeGrid& cone, double log_step) {
  if (cone.t.size() < 2) throw InputError("square function needs at least two cone levels");
  CellHeat heat(h, f);
  const double t_min = cone.t.front(), t_max = cone.t.back();
  const double kInvSqrtPi = 1.0 / std::sqrt(std::numbers::pi);

  // heat extension on the log-time grid s_i = exp(i * log_step) for t q_t by subordination
  const double umax = 150.0, umin = 1e-12;
  const long i0 = static_cast<long>(std::floor(std::log(t_min * t_min / (4.0 * umax)) / log_step));
  const long i1 = static_cast<long>(std::ceil(std::log(t_max * t_max / (4.0 * umin)) / log_step));
  std::vector<double> s;
  for (long i = i0; i <= i1; ++i) s.push_back(std::exp(static_cast<double>(i) * log_step));

  // cell masses for the y nodes; extra points carry none
  std::vector<double> ymass(cone.y.size(), 0.0);
  for (std::size_t yi = 0; yi < cone.y.size(); ++yi) {
    const std::size_t c = f.locate(cone.y[yi]);
    if (c < f.size() && (f.center(c) - cone.y[yi]).norm() <= 1e-12 * (1.0 + cone.y[yi].norm())) ymass[yi] = f.mass(c);
  }

  // Q_t f(y) for every level and every y that some x sees
  std::vector<std::vector<double>> Q(cone.t.size(), std::vector<double>(cone.y.size(), 0.0));
  double max_doubling = 0.0;
  for (std::size_t yi = 0; yi < cone.y.size(); ++yi) {
    if (ymass[yi] == 0.0) continue;
    bool used = false;
    for (const auto& x : xs) used = used || (x - cone.y[yi]).norm() < t_max;
    if (!used) continue;
    std::vector<double> H(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) H[i] = heat.apply(s[i], cone.y[yi]);
    for (std::size_t ti = 0; ti < cone.t.size(); ++ti) {
      const double t = cone.t[ti];
      double q = 0.0, qc = 0.0, qa = 0.0;
      for (std::size_t i = 0; i < s.size(); ++i) {
        const double u = t * t / (4.0 * s[i]);
        if (u > 745.0) continue;
        const double term = kInvSqrtPi * log_step * std::exp(-u) * std::sqrt(u) * (1.0 - 2.0 * u) * H[i];
        q += term;
        qa += std::abs(term);
        if ((i0 + static_cast<long>(i)) % 2 == 0) qc += 2.0 * term;
      }
      Q[ti][yi] = q;
      if (qa > 0.0) max_doubling = std::max(max_doubling, std::abs(q - qc) / qa);
    }
  }

  // sup_{y,z} |t q_t(y,z)| <= c_k^{-1} (2/t^2)^{N/2} K
  const double a = 0.5 * (h.hom_dim() + 1.0);
  const double K = kInvSqrtPi * (2.0 * std::tgamma(a + 1.0) - std::tgamma(a) +
                                 2.0 * (boost::math::tgamma_lower(a, 0.5) - 2.0 * boost::math::tgamma_lower(a + 1.0, 0.5)));
  const double nh = h.hom_dim();
  const double tail2 = std::pow(heat.l1() * K / h.c_k(), 2) * std::pow(2.0, nh) * std::pow(t_max, -2.0 * nh) / (2.0 * nh);

  const double dlog = std::log(cone.t[1] / cone.t[0]);
  std::vector<GridOperatorValue> out;
  for (const auto& x : xs) {
    double s2 = 0.0;
    for (std::size_t ti = 0; ti < cone.t.size(); ++ti) {
      const double t = cone.t[ti];
      double inner = 0.0;
      for (std::size_t yi = 0; yi < cone.y.size(); ++yi)
        if (ymass[yi] > 0.0 && cone.in_cone(x, ti, yi)) inner += Q[ti][yi] * Q[ti][yi] * ymass[yi];
      const double wt = (ti == 0 || ti + 1 == cone.t.size()) ? 0.5 * dlog : dlog;
      s2 += wt * inner / f.weight().ball_volume(x, t, QuadSettings{1e-9, 0.0, 30}).value;
    }
    GridOperatorValue v;
    v.value = std::sqrt(s2);
    v.truncation_bound = std::sqrt(tail2);
    v.y = x;
    v.resolution = {{"t_min", t_min},
                    {"t_max", t_max},
                    {"t_levels", cone.t.size()},
                    {"log_step", log_step},
                    {"max_doubling_change", max_doubling},
                    {"cells", f.size()},
                    {"cell_rule", "4-point Gauss on pieces of length <= sqrt(s)/4"}};
    out.push_back(std::move(v));
  }
  return out;
}

GridOperatorValue square_function(const HeatKernel& h, const WeightedGridFunction& f, const Vec& x,
                                  const ConeGrid& cone, double log_step) {
  return square_function(h, f, std::vector<Vec>{x}, cone, log_step).front();
}

// ---------------------------------------------------------------- L^1 with tail

L1Estimate l1_norm_with_tail(const WeightedGridFunction& g, const Vec& x0, double r) {
  L1Estimate e;
  for (std::size_t i = 0; i < g.size(); ++i) e.inside += std::abs(g.value(i)) * g.mass(i);
  if (g.dim() != 1) {
    e.tail = std::nan("");
    return e;
  }
  const auto& w = g.weight();
  const auto& rs = w.system();
  const double lo = g.lo()(0), hi = g.hi()(0), mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
  auto shape = [&](double x) {
    const double d = orbit_distance(rs, vec({x}), x0);
    if (!(d > 0.0)) return kInf;
    return r / d / w.ball_volume(x0, d, QuadSettings{1e-10, 0.0, 30}).value;
  };
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double x = g.center(i)(0);
    if (std::abs(x - mid) < 0.75 * half) continue;
    const double b = shape(x);
    if (std::isfinite(b) && b > 0.0) e.tail_constant = std::max(e.tail_constant, std::abs(g.value(i)) / b);
  }
  // int over x > hi and x < lo of shape(x) dw(x), x = edge +- tan(theta)
  auto side = [&](double edge, double sgn) {
    auto f = [&](double th) {
      const double tn = std::tan(th), sec = 1.0 / std::cos(th);
      const double x = edge + sgn * tn;
      return shape(x) * w(vec({x})) * sec * sec;
    };
    return integrate(f, 0.0, 0.5 * std::numbers::pi, {}, QuadSettings{1e-8, 0.0, 30}).value;
  };
  e.tail = e.tail_constant * (side(hi, 1.0) + side(lo, -1.0));
  return e;
}

}  // namespace dunkl
