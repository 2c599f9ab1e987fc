#pragma once

#include "dunkl/common.hpp"

#include <json.hpp>

#include <limits>
#include <string>
#include <vector>

namespace dunkl {

struct CandidateResult {
  double dilation = 1.0;  // comparison kernel evaluated at time dilation * t
  double sup_base = 0.0;
  double sup_refined = std::numeric_limits<double>::quiet_NaN();
  bool finite = false;
  bool stable = false;
};

struct CurvePoint {
  double t = 0.0;
  Vec x, y;
  double ratio = 0.0;
};

struct EstimateCertificate {
  std::string id;
  std::string system;
  nlohmann::json domain = nlohmann::json::object();
  double C = std::numeric_limits<double>::infinity();
  double dilation = std::numeric_limits<double>::quiet_NaN();
  double worst_ratio = std::numeric_limits<double>::infinity();
  Vec worst_x, worst_y;
  double worst_t = std::numeric_limits<double>::quiet_NaN();
  bool pass = false;
  std::vector<CandidateResult> candidates;
  std::vector<CurvePoint> curve;
  nlohmann::json extra = nlohmann::json::object();

  nlohmann::json to_json() const;
  static EstimateCertificate from_json(const nlohmann::json& j);
};

nlohmann::json vec_to_json(const Vec& v);
Vec vec_from_json(const nlohmann::json& j);
std::string vec_to_string(const Vec& v);

}  // namespace dunkl
