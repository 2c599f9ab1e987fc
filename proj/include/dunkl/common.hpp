#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace dunkl {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InvalidRoot : Error {
  using Error::Error;
};

struct ConstructionError : Error {
  using Error::Error;
};

// Raised when an exact kernel is not available for the root system.
struct UnsupportedSystem : Error {
  using Error::Error;
};

struct WallSingularity : Error {
  using Error::Error;
};

struct DomainError : Error {
  using Error::Error;
};

struct InputError : Error {
  using Error::Error;
};

// A derived constant needed by an algorithm could not be established.
struct ConfigError : Error {
  using Error::Error;
};

// A sampled function does not decay enough for the truncated transform.
struct TailBoundError : Error {
  using Error::Error;
};

struct BudgetExceeded : Error {
  double best_value;
  BudgetExceeded(const std::string& what, double best) : Error(what), best_value(best) {}
};

inline Vec vec(std::initializer_list<double> v) {
  Vec out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

}  // namespace dunkl
