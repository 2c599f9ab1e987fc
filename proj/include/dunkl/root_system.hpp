#pragma once

#include "dunkl/common.hpp"

#include <optional>
#include <string>
#include <vector>

namespace dunkl {

struct Root {
  Vec vector;
  double multiplicity = 0.0;
};

enum class SystemKind { A1Product, A2, B2, Explicit };

// Named-system description as read from the command line or a config file.
struct SystemSpec {
  SystemKind kind = SystemKind::A1Product;
  std::vector<double> k;     // A1Product: one per axis; A2: {k}; B2: {k_short, k_long}
  std::vector<Root> roots;   // Explicit only
};

struct OrbitGeometry {
  Vec base;
  std::vector<Vec> points;
  std::vector<int> reflection_count;
};

class RootSystem {
 public:
  static RootSystem a1_product(const std::vector<double>& k);
  static RootSystem a2(double k);
  static RootSystem b2(double k_short, double k_long);
  // Roots are rescaled to norm sqrt(2); the input norms are kept in input_scales().
  static RootSystem explicit_roots(int dim, std::vector<Root> roots);
  static RootSystem build(const SystemSpec& spec);

  int dim() const { return dim_; }
  const std::vector<Root>& roots() const { return roots_; }
  const std::vector<Mat>& weyl_group() const { return group_; }
  // Word length of each group element over the reflections in R.
  const std::vector<int>& word_lengths() const { return lengths_; }
  double gamma() const { return gamma_; }
  double hom_dim() const { return dim_ + 2.0 * gamma_; }
  const std::vector<double>& input_scales() const { return scales_; }
  const std::string& name() const { return name_; }

  // True when every root is ±sqrt(2) e_j. Axes without roots have k_j = 0.
  bool is_product() const { return product_; }
  const std::vector<double>& axis_k() const { return axis_k_; }

  Vec reflect(std::size_t root_index, const Vec& x) const;

 private:
  RootSystem(int dim, std::vector<Root> roots, std::string name, std::vector<double> scales);

  int dim_ = 0;
  std::vector<Root> roots_;
  std::vector<Mat> group_;
  std::vector<int> lengths_;
  double gamma_ = 0.0;
  std::vector<double> scales_;
  std::string name_;
  bool product_ = false;
  std::vector<double> axis_k_;
};

Vec reflect(const Root& alpha, const Vec& x);
Mat reflection_matrix(const Vec& alpha);

double orbit_distance(const RootSystem& rs, const Vec& x, const Vec& y);

// Least number of reflections mapping y onto x, or nullopt if x is not in the orbit of y.
std::optional<int> min_reflection_count(const RootSystem& rs, const Vec& x, const Vec& y,
                                        double tol = 1e-10);

OrbitGeometry orbit(const RootSystem& rs, const Vec& x, double tol = 1e-10);

SystemSpec parse_system_name(const std::string& name, int dim, const std::vector<double>& k);

}  // namespace dunkl
