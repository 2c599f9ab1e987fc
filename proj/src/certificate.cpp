#include "dunkl/certificate.hpp"

#include <cmath>
#include <sstream>

namespace dunkl {

using nlohmann::json;

namespace {

json num(double v) {
  if (std::isnan(v)) return nullptr;
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

double from_num(const json& j) {
  if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    throw InputError("bad number '" + s + "'");
  }
  return j.get<double>();
}

}  // namespace

json vec_to_json(const Vec& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

Vec vec_from_json(const json& j) {
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  return v;
}

std::string vec_to_string(const Vec& v) {
  std::ostringstream os;
  os.precision(10);
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) os << ';';
    os << v(i);
  }
  return os.str();
}

json EstimateCertificate::to_json() const {
  json j;
  j["id"] = id;
  j["system"] = system;
  j["domain"] = domain;
  j["C"] = num(C);
  j["dilation"] = num(dilation);
  j["c"] = num(std::isnan(dilation) ? dilation : 1.0 / dilation);
  j["worst_ratio"] = num(worst_ratio);
  j["worst"] = {{"x", vec_to_json(worst_x)}, {"y", vec_to_json(worst_y)}, {"t", num(worst_t)}};
  j["pass"] = pass;
  json cands = json::array();
  for (const auto& c : candidates)
    cands.push_back({{"dilation", c.dilation},
                     {"sup_base", num(c.sup_base)},
                     {"sup_refined", num(c.sup_refined)},
                     {"finite", c.finite},
                     {"stable", c.stable}});
  j["candidates"] = cands;
  json cv = json::array();
  for (const auto& p : curve)
    cv.push_back({{"t", p.t}, {"x", vec_to_json(p.x)}, {"y", vec_to_json(p.y)}, {"ratio", num(p.ratio)}});
  j["curve"] = cv;
  j["extra"] = extra;
  return j;
}

EstimateCertificate EstimateCertificate::from_json(const json& j) {
  EstimateCertificate c;
  c.id = j.at("id").get<std::string>();
  c.system = j.value("system", "");
  c.domain = j.value("domain", json::object());
  c.C = from_num(j.at("C"));
  c.dilation = from_num(j.value("dilation", json(nullptr)));
  c.worst_ratio = from_num(j.at("worst_ratio"));
  if (j.contains("worst")) {
    c.worst_x = vec_from_json(j["worst"].value("x", json::array()));
    c.worst_y = vec_from_json(j["worst"].value("y", json::array()));
    c.worst_t = from_num(j["worst"].value("t", json(nullptr)));
  }
  c.pass = j.at("pass").get<bool>();
  for (const auto& cj : j.value("candidates", json::array())) {
    CandidateResult r;
    r.dilation = cj.at("dilation").get<double>();
    r.sup_base = from_num(cj.at("sup_base"));
    r.sup_refined = from_num(cj.at("sup_refined"));
    r.finite = cj.at("finite").get<bool>();
    r.stable = cj.at("stable").get<bool>();
    c.candidates.push_back(r);
  }
  for (const auto& pj : j.value("curve", json::array())) {
    CurvePoint p;
    p.t = pj.at("t").get<double>();
    p.x = vec_from_json(pj.at("x"));
    p.y = vec_from_json(pj.at("y"));
    p.ratio = from_num(pj.at("ratio"));
    c.curve.push_back(p);
  }
  c.extra = j.value("extra", json::object());
  return c;
}

}  // namespace dunkl
