#include "dunkl/root_system.hpp"

#include <cmath>
#include <deque>
#include <numbers>

namespace dunkl {

namespace {

constexpr double kGroupTol = 1e-10;
constexpr std::size_t kGroupCap = 10000;

bool same_matrix(const Mat& a, const Mat& b) {
  return (a - b).cwiseAbs().maxCoeff() < kGroupTol;
}

std::vector<Root> drop_zero(std::vector<Root> roots) {
  std::vector<Root> out;
  for (auto& r : roots)
    if (r.multiplicity != 0.0) out.push_back(std::move(r));
  return out;
}

}  // namespace

Mat reflection_matrix(const Vec& alpha) {
  const double n2 = alpha.squaredNorm();
  if (n2 == 0.0) throw InvalidRoot("zero root vector");
  return Mat::Identity(alpha.size(), alpha.size()) - (2.0 / n2) * alpha * alpha.transpose();
}

Vec reflect(const Root& alpha, const Vec& x) {
  const double n2 = alpha.vector.squaredNorm();
  if (n2 == 0.0) throw InvalidRoot("zero root vector");
  return x - (2.0 * x.dot(alpha.vector) / n2) * alpha.vector;
}

RootSystem::RootSystem(int dim, std::vector<Root> roots, std::string name,
                       std::vector<double> scales)
    : dim_(dim), roots_(std::move(roots)), scales_(std::move(scales)), name_(std::move(name)) {
  if (dim_ < 1) throw ConstructionError("dimension must be positive");
  for (const auto& r : roots_) {
    if (r.vector.size() != dim_) throw ConstructionError("root has wrong dimension");
    if (std::abs(r.vector.squaredNorm() - 2.0) > 1e-12)
      throw ConstructionError("root is not normalized to norm sqrt(2)");
    if (!(r.multiplicity >= 0.0)) throw ConstructionError("negative multiplicity");
  }

  // closure and G-invariance of k
  auto find_root = [&](const Vec& v) -> const Root* {
    for (const auto& r : roots_)
      if ((r.vector - v).cwiseAbs().maxCoeff() < kGroupTol) return &r;
    return nullptr;
  };
  for (const auto& a : roots_) {
    for (const auto& b : roots_) {
      const Root* img = find_root(dunkl::reflect(a, b.vector));
      if (!img) throw ConstructionError("root set is not closed under its reflections");
      if (std::abs(img->multiplicity - b.multiplicity) > 1e-12)
        throw ConstructionError("multiplicity is not G-invariant");
    }
  }

  // generators: one reflection per pair ±alpha
  std::vector<Mat> gens;
  for (const auto& r : roots_) {
    Mat s = reflection_matrix(r.vector);
    bool dup = false;
    for (const auto& g : gens) dup = dup || same_matrix(g, s);
    if (!dup) gens.push_back(std::move(s));
  }

  group_.push_back(Mat::Identity(dim_, dim_));
  lengths_.push_back(0);
  std::deque<std::size_t> queue{0};
  while (!queue.empty()) {
    const std::size_t i = queue.front();
    queue.pop_front();
    for (const auto& s : gens) {
      Mat m = s * group_[i];
      bool seen = false;
      for (const auto& g : group_) {
        if (same_matrix(g, m)) {
          seen = true;
          break;
        }
      }
      if (seen) continue;
      if (group_.size() >= kGroupCap)
        throw ConstructionError("Weyl group exceeds 10000 elements");
      group_.push_back(std::move(m));
      lengths_.push_back(lengths_[i] + 1);
      queue.push_back(group_.size() - 1);
    }
  }

  double sum_k = 0.0;
  for (const auto& r : roots_) sum_k += r.multiplicity;
  gamma_ = 0.5 * sum_k;

  product_ = true;
  axis_k_.assign(static_cast<std::size_t>(dim_), 0.0);
  for (const auto& r : roots_) {
    int nonzero = 0, axis = -1;
    for (int j = 0; j < dim_; ++j) {
      if (std::abs(r.vector(j)) > 1e-14) {
        ++nonzero;
        axis = j;
      }
    }
    if (nonzero != 1) {
      product_ = false;
      continue;
    }
    axis_k_[static_cast<std::size_t>(axis)] = r.multiplicity;
  }
  if (!product_) axis_k_.clear();
}

RootSystem RootSystem::a1_product(const std::vector<double>& k) {
  if (k.empty()) throw ConstructionError("A1 product needs at least one axis");
  const int n = static_cast<int>(k.size());
  std::vector<Root> roots;
  for (int j = 0; j < n; ++j) {
    Vec e = Vec::Zero(n);
    e(j) = std::numbers::sqrt2;
    roots.push_back({e, k[static_cast<std::size_t>(j)]});
    roots.push_back({-e, k[static_cast<std::size_t>(j)]});
  }
  return RootSystem(n, drop_zero(std::move(roots)), "a1x" + std::to_string(n),
                    std::vector<double>(2 * k.size(), std::numbers::sqrt2));
}

RootSystem RootSystem::a2(double k) {
  std::vector<Root> roots;
  for (int j = 0; j < 6; ++j) {
    const double th = (30.0 + 60.0 * j) * std::numbers::pi / 180.0;
    roots.push_back({vec({std::numbers::sqrt2 * std::cos(th), std::numbers::sqrt2 * std::sin(th)}), k});
  }
  return RootSystem(2, drop_zero(std::move(roots)), "a2", std::vector<double>(6, std::numbers::sqrt2));
}

RootSystem RootSystem::b2(double k_short, double k_long) {
  const double s = std::numbers::sqrt2;
  std::vector<Root> roots = {
      {vec({s, 0}), k_short},  {vec({-s, 0}), k_short}, {vec({0, s}), k_short},
      {vec({0, -s}), k_short}, {vec({1, 1}), k_long},   {vec({-1, -1}), k_long},
      {vec({1, -1}), k_long},  {vec({-1, 1}), k_long},
  };
  return RootSystem(2, drop_zero(std::move(roots)), "b2", std::vector<double>(8, s));
}

RootSystem RootSystem::explicit_roots(int dim, std::vector<Root> roots) {
  std::vector<double> scales;
  for (auto& r : roots) {
    const double n = r.vector.norm();
    if (n == 0.0) throw ConstructionError("zero root vector");
    scales.push_back(n);
    r.vector *= std::numbers::sqrt2 / n;
  }
  return RootSystem(dim, std::move(roots), "explicit", std::move(scales));
}

RootSystem RootSystem::build(const SystemSpec& spec) {
  switch (spec.kind) {
    case SystemKind::A1Product:
      return a1_product(spec.k);
    case SystemKind::A2:
      if (spec.k.size() != 1) throw ConstructionError("A2 takes one multiplicity");
      return a2(spec.k[0]);
    case SystemKind::B2:
      if (spec.k.size() != 2) throw ConstructionError("B2 takes k_short and k_long");
      return b2(spec.k[0], spec.k[1]);
    case SystemKind::Explicit: {
      if (spec.roots.empty()) throw ConstructionError("explicit system needs roots");
      return explicit_roots(static_cast<int>(spec.roots.front().vector.size()), spec.roots);
    }
  }
  throw ConstructionError("unknown system kind");
}

Vec RootSystem::reflect(std::size_t root_index, const Vec& x) const {
  return dunkl::reflect(roots_.at(root_index), x);
}

double orbit_distance(const RootSystem& rs, const Vec& x, const Vec& y) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& g : rs.weyl_group()) best = std::min(best, (g * x - y).norm());
  return best;
}

std::optional<int> min_reflection_count(const RootSystem& rs, const Vec& x, const Vec& y,
                                        double tol) {
  std::optional<int> best;
  const auto& group = rs.weyl_group();
  for (std::size_t i = 0; i < group.size(); ++i) {
    if ((group[i] * y - x).norm() <= tol) {
      const int len = rs.word_lengths()[i];
      if (!best || len < *best) best = len;
    }
  }
  return best;
}

OrbitGeometry orbit(const RootSystem& rs, const Vec& x, double tol) {
  OrbitGeometry og;
  og.base = x;
  const auto& group = rs.weyl_group();
  for (std::size_t i = 0; i < group.size(); ++i) {
    Vec p = group[i] * x;
    bool seen = false;
    for (const auto& q : og.points) seen = seen || (q - p).cwiseAbs().maxCoeff() < tol;
    if (seen) continue;
    og.points.push_back(std::move(p));
    og.reflection_count.push_back(rs.word_lengths()[i]);
  }
  return og;
}

SystemSpec parse_system_name(const std::string& name, int dim, const std::vector<double>& k) {
  SystemSpec spec;
  if (name == "a1xN" || name == "a1" || name == "a1_product" || name.rfind("a1x", 0) == 0) {
    int n = dim;
    if (name.rfind("a1x", 0) == 0 && name != "a1xN") n = std::stoi(name.substr(3));
    if (n < 1) throw ConstructionError("A1 product needs N >= 1");
    spec.kind = SystemKind::A1Product;
    if (k.size() == 1) {
      spec.k.assign(static_cast<std::size_t>(n), k[0]);
    } else if (static_cast<int>(k.size()) == n) {
      spec.k = k;
    } else {
      throw ConstructionError("need one multiplicity or one per axis");
    }
  } else if (name == "a2") {
    spec.kind = SystemKind::A2;
    spec.k = {k.empty() ? 1.0 : k[0]};
  } else if (name == "b2") {
    spec.kind = SystemKind::B2;
    if (k.size() == 1) spec.k = {k[0], k[0]};
    else if (k.size() == 2) spec.k = k;
    else throw ConstructionError("B2 takes k_short,k_long");
  } else {
    throw ConstructionError("unknown root system '" + name + "'");
  }
  return spec;
}

}  // namespace dunkl
