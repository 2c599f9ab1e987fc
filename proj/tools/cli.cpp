#include "cli.hpp"

#include "dunkl/atoms.hpp"
#include "dunkl/certificate.hpp"
#include "dunkl/heat_kernel.hpp"
#include "dunkl/poisson.hpp"
#include "dunkl/weighted_measure.hpp"

#include <CLI11.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <thread>
#include <tuple>

namespace dunkl::cli {

namespace {

namespace fs = std::filesystem;
namespace pt = boost::property_tree;
using nlohmann::json;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string num(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string vec_str(const Vec& v) {
  std::string s;
  for (Eigen::Index i = 0; i < v.size(); ++i) s += (i ? ";" : "") + num(v(i));
  return s;
}

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, ',')) {
    cur.erase(0, cur.find_first_not_of(" \t"));
    cur.erase(cur.find_last_not_of(" \t") + 1);
    if (!cur.empty()) out.push_back(cur);
  }
  return out;
}

std::vector<double> number_list(const std::string& s, const std::string& what) {
  std::vector<double> v;
  for (const auto& item : split(s)) {
    std::size_t used = 0;
    double x = 0.0;
    try {
      x = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size()) throw UsageError(what + ": '" + item + "' is not a number");
    v.push_back(x);
  }
  return v;
}

Vec to_vec(const std::vector<double>& v) {
  Vec out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out(static_cast<Eigen::Index>(i)) = v[i];
  return out;
}

// INI values with defaults; every value read is echoed.
class Config {
 public:
  void load(const std::string& path) {
    try {
      pt::read_ini(path, tree_);
    } catch (const pt::ini_parser_error& e) {
      throw UsageError("config: " + std::string(e.what()));
    }
  }
  void set(const std::string& path, const std::string& value) { tree_.put(path, value); }

  template <class T>
  T get(const std::string& path, const T& fallback) {
    T v = fallback;
    try {
      if (auto node = tree_.get_child_optional(path)) v = node->get_value<T>();
    } catch (const pt::ptree_error& e) {
      throw UsageError("config " + path + ": " + e.what());
    }
    const auto dot = path.find('.');
    echo_[path.substr(0, dot)][path.substr(dot + 1)] = v;
    return v;
  }
  std::string str(const std::string& path, const std::string& fallback) { return get<std::string>(path, fallback); }
  const json& echo() const { return echo_; }

 private:
  pt::ptree tree_;
  json echo_ = json::object();
};

void positive(double v, const std::string& what) {
  if (!(v > 0.0) || !std::isfinite(v)) throw UsageError(what + " must be positive");
}

void range(double lo, double hi, const std::string& what) {
  if (!(lo < hi)) throw UsageError(what + ": empty range");
}

// uniform points in [lo, hi]^n from a fixed generator
std::vector<Vec> random_points(std::mt19937_64& rng, int n, int count, double lo, double hi) {
  std::vector<Vec> out;
  for (int i = 0; i < count; ++i) {
    Vec p(n);
    for (int j = 0; j < n; ++j) p(j) = lo + (hi - lo) * static_cast<double>(rng() >> 11) * 0x1.0p-53;
    out.push_back(p);
  }
  return out;
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw DataError("cannot write " + p.string());
  f.precision(17);
  return f;
}

// ---------------------------------------------------------------- verify

struct VerifyJob {
  std::string id;
  std::optional<EstimateCertificate> cert;
  std::string unsupported;
  std::string error;
};

const std::vector<std::string> kMeasureIds{"measure_behavior", "measure_doubling", "measure_growth"};

bool contains(const std::vector<std::string>& v, const std::string& s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

std::vector<std::string> known_ids() {
  std::vector<std::string> ids = heat_estimate_ids();
  for (const auto& s : poisson_estimate_ids()) ids.push_back(s);
  for (const auto& s : kMeasureIds) ids.push_back(s);
  ids.push_back("product_sharpness");
  ids.push_back("radial_translation_bound");
  return ids;
}

struct VerifyPlan {
  RootSystem rs = RootSystem::a1_product({1.0});
  std::string system_label;
  std::vector<std::string> ids;
  fs::path out;
  int workers = 1;
  double tol = 1e-6;
  HeatSweep heat;
  PoissonSweep poisson;
  MeasureSweep measure;
  SharpnessOptions sharp;
  Vec sharp_x;
  TranslationSweep translation;
  json config;
};

VerifyPlan plan_verify(Config& c) {
  VerifyPlan p;
  const std::string name = c.str("system.name", "a1xN");
  const int N = c.get<int>("system.N", 1);
  const auto k = number_list(c.str("system.k", "1"), "system.k");
  try {
    if (name == "explicit") {
      // roots = "v1,v2:k; w1,w2:k"
      SystemSpec spec;
      spec.kind = SystemKind::Explicit;
      std::istringstream in(c.str("system.roots", ""));
      for (std::string item; std::getline(in, item, ';');) {
        const auto colon = item.find(':');
        if (colon == std::string::npos) throw UsageError("system.roots entry '" + item + "' lacks ':k'");
        const auto m = number_list(item.substr(colon + 1), "root multiplicity");
        if (m.size() != 1) throw UsageError("system.roots entry '" + item + "' needs one multiplicity");
        spec.roots.push_back({to_vec(number_list(item.substr(0, colon), "root vector")), m[0]});
      }
      p.rs = RootSystem::build(spec);
    } else {
      p.rs = RootSystem::build(parse_system_name(name, N, k));
    }
  } catch (const UsageError&) {
    throw;
  } catch (const std::exception& e) {
    throw UsageError(std::string("system: ") + e.what());
  }
  p.system_label = p.rs.name();
  p.ids = split(c.str("run.estimates", ""));
  if (p.ids.empty()) throw UsageError("no estimates requested (--estimates)");
  const auto known = known_ids();
  for (const auto& id : p.ids)
    if (!contains(known, id)) {
      std::string list;
      for (const auto& s : known) list += (list.empty() ? "" : ", ") + s;
      throw UsageError("unknown estimate '" + id + "'; known: " + list);
    }
  p.out = c.str("run.out", "dunkl-out");
  p.workers = c.get<int>("run.workers", 1);
  if (p.workers < 1) throw UsageError("workers must be at least 1");
  const auto seed = c.get<unsigned long long>("run.seed", 0);
  p.tol = c.get<double>("run.tol", 1e-6);
  positive(p.tol, "tol");
  std::mt19937_64 rng(seed);
  const int n = p.rs.dim();

  auto& h = p.heat;
  h.lo = c.get("heat.lo", h.lo);
  h.hi = c.get("heat.hi", h.hi);
  h.points = c.get("heat.points", h.points);
  h.t_min = c.get("heat.t_min", h.t_min);
  h.t_max = c.get("heat.t_max", h.t_max);
  h.t_per_octave = c.get("heat.t_per_octave", h.t_per_octave);
  h.refine = c.get("heat.refine", h.refine);
  h.stability = c.get("heat.stability", h.stability);
  range(h.lo, h.hi, "heat x range");
  range(h.t_min, h.t_max, "heat t range");
  if (h.points < 1 || h.t_per_octave < 1) throw UsageError("heat sweep resolution must be positive");
  positive(h.t_min, "heat.t_min");
  h.extra_points = random_points(rng, n, c.get("heat.random_points", 0), h.lo, h.hi);

  auto& q = p.poisson;
  q.lo = c.get("poisson.lo", q.lo);
  q.hi = c.get("poisson.hi", q.hi);
  q.points = c.get("poisson.points", q.points);
  q.t_min = c.get("poisson.t_min", q.t_min);
  q.t_max = c.get("poisson.t_max", q.t_max);
  q.t_per_octave = c.get("poisson.t_per_octave", q.t_per_octave);
  q.refine = c.get("poisson.refine", q.refine);
  q.stability = c.get("poisson.stability", q.stability);
  q.probe_t = c.get("poisson.probe_t", q.probe_t);
  q.quad_tol = p.tol;
  range(q.lo, q.hi, "poisson x range");
  range(q.t_min, q.t_max, "poisson t range");
  if (q.points < 1 || q.t_per_octave < 1) throw UsageError("poisson sweep resolution must be positive");
  positive(q.t_min, "poisson.t_min");
  q.extra_points = random_points(rng, n, c.get("poisson.random_points", 0), q.lo, q.hi);

  const double mlo = c.get("measure.lo", -2.0), mhi = c.get("measure.hi", 2.0);
  const int mpts = c.get("measure.points", 3);
  range(mlo, mhi, "measure center range");
  if (mpts < 1) throw UsageError("measure.points must be positive");
  HeatSweep lattice;
  lattice.lo = mlo;
  lattice.hi = mhi;
  lattice.points = mpts;
  p.measure.centers = lattice.lattice(n);
  p.measure.radii = number_list(c.str("measure.radii", "0.25,1,4"), "measure.radii");
  if (p.measure.radii.empty()) throw UsageError("measure.radii is empty");
  for (double r : p.measure.radii) positive(r, "measure radius");

  auto& s = p.sharp;
  s.t_min = c.get("sharpness.t_min", s.t_min);
  s.t_max = c.get("sharpness.t_max", s.t_max);
  s.t_per_octave = c.get("sharpness.t_per_octave", s.t_per_octave);
  positive(s.t_min, "sharpness.t_min");
  range(s.t_min, s.t_max, "sharpness t range");
  const auto sx = number_list(c.str("sharpness.x", ""), "sharpness.x");
  p.sharp_x = sx.empty() ? Vec(-Vec::Ones(n)) : to_vec(sx);
  if (p.sharp_x.size() != n) throw UsageError("sharpness.x needs one entry per axis");

  auto& tr = p.translation;
  tr.t = c.get("translation.t", tr.t);
  tr.xs = number_list(c.str("translation.xs", "-3,-2,-1.5,-1,-0.5,0,0.5,1,1.5,2,3"), "translation.xs");
  tr.slack = c.get("translation.slack", tr.slack);
  tr.support_tol = c.get("translation.support_tol", tr.support_tol);
  positive(tr.t, "translation.t");
  if (tr.xs.empty()) throw UsageError("translation.xs is empty");

  p.config = c.echo();
  return p;
}

double bump(double r) { return r < 1.0 ? std::exp(-1.0 / (1.0 - r * r)) : 0.0; }

void run_job(const VerifyPlan& p, VerifyJob& job) {
  try {
    if (contains(kMeasureIds, job.id)) {
      WeightFunction w(p.rs);
      for (auto& cert : certify_measure_facts(w, p.measure, QuadSettings{p.tol, 0.0, 24}))
        if (cert.id == job.id) job.cert = std::move(cert);
      if (!job.cert) job.error = "no certificate produced";
      return;
    }
    HeatKernel h(p.rs, QuadSettings{p.tol, 0.0, 24});
    if (contains(heat_estimate_ids(), job.id)) job.cert = certify_estimate(h, job.id, p.heat);
    else if (contains(poisson_estimate_ids(), job.id)) job.cert = certify_poisson_estimate(h, job.id, p.poisson);
    else if (job.id == "product_sharpness") job.cert = certify_product_sharpness(h, p.sharp_x, p.sharp);
    else if (job.id == "radial_translation_bound") job.cert = certify_radial_translation_bound(h, bump, p.translation);
  } catch (const UnsupportedSystem& e) {
    job.unsupported = e.what();
  } catch (const std::exception& e) {
    job.error = e.what();
  }
}

int cmd_verify(Config& c, std::ostream& out, std::ostream& err) {
  const VerifyPlan p = plan_verify(c);
  std::vector<VerifyJob> jobs;
  for (const auto& id : p.ids) jobs.push_back({id, std::nullopt, "", ""});
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  const auto nworkers = std::min<std::size_t>(static_cast<std::size_t>(p.workers), jobs.size());
  for (std::size_t w = 0; w < nworkers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i; (i = next++) < jobs.size();) run_job(p, jobs[i]);
    });
  for (auto& t : pool) t.join();

  std::error_code ec;
  fs::create_directories(p.out, ec);
  if (ec) throw DataError("cannot create output directory " + p.out.string());
  auto jl = open_out(p.out / "certificates.jsonl");
  auto csv = open_out(p.out / "aggregate.csv");
  auto cfg = open_out(p.out / "config.json");
  cfg << p.config.dump(2) << "\n";
  csv << "estimate,system,status,C,c,worst_ratio,worst_x,worst_y,worst_t\n";

  bool failed = false, unsupported = false;
  for (const auto& j : jobs) {
    std::string status;
    if (!j.unsupported.empty()) {
      unsupported = true;
      status = "unsupported";
      err << "estimate " << j.id << ": unsupported system: " << j.unsupported << "\n";
      csv << j.id << "," << p.system_label << "," << status << ",,,,,,\n";
      continue;
    }
    if (!j.error.empty()) {
      failed = true;
      status = "error";
      err << "estimate " << j.id << ": " << j.error << "\n";
      csv << j.id << "," << p.system_label << "," << status << ",,,,,,\n";
      continue;
    }
    const auto& cert = *j.cert;
    status = cert.pass ? "pass" : "fail";
    failed = failed || !cert.pass;
    json rec = cert.to_json();
    rec["config"] = p.config;
    // neither changes a result
    rec["config"]["run"].erase("out");
    rec["config"]["run"].erase("workers");
    jl << rec.dump() << "\n";
    const double cc = std::isnan(cert.dilation) ? cert.dilation : 1.0 / cert.dilation;
    csv << cert.id << "," << cert.system << "," << status << "," << num(cert.C) << "," << num(cc) << ","
        << num(cert.worst_ratio) << "," << vec_str(cert.worst_x) << "," << vec_str(cert.worst_y) << ","
        << num(cert.worst_t) << "\n";
    out << cert.id << ": " << status << " C=" << num(cert.C) << " c=" << num(cc) << "\n";
  }
  if (unsupported) return kUnsupported;
  return failed ? kFail : kPass;
}

// ---------------------------------------------------------------- decompose

void save_grid(const WeightedGridFunction& f, const fs::path& stem) {
  try {
    f.save(stem.string());
  } catch (const InputError& e) {
    throw DataError(e.what());
  }
}

int cmd_decompose(Config& c, std::ostream& out, std::ostream&) {
  const std::string input = c.str("decompose.input", "");
  if (input.empty()) throw UsageError("decompose needs --input <stem> (stem.json + stem.csv)");
  const std::string mode = c.str("decompose.mode", "chain");
  if (mode != "chain" && mode != "cz") throw UsageError("mode must be chain or cz");
  const double tol = c.get("run.tol", 1e-6);
  positive(tol, "tol");
  const double tail = c.get("decompose.tail", 1e-5);
  positive(tail, "decompose.tail");
  const fs::path dir = c.str("run.out", "dunkl-out");

  std::optional<WeightedGridFunction> g;
  try {
    g = WeightedGridFunction::load(input);
  } catch (const std::exception& e) {
    throw DataError("cannot read grid function '" + input + "': " + e.what());
  }

  std::optional<Decomposition> d;
  json summary;
  if (mode == "chain") {
    const auto y0 = number_list(c.str("decompose.y0", ""), "y0");
    const double r = c.get("decompose.r", 0.0);
    if (static_cast<int>(y0.size()) != g->dim()) throw UsageError("chain mode needs --y0 with one entry per axis");
    positive(r, "r");
    ChainOptions opt;
    opt.budget = c.get("decompose.budget", opt.budget);
    opt.tol = tol;
    try {
      d = chain_decompose(*g, to_vec(y0), r, opt);
    } catch (const InputError& e) {
      throw DataError(std::string("chain decomposition: ") + e.what());
    }
    summary["chain_coefficient_sum"] = d->bookkeeping["chain_coefficient_sum"];
    summary["chain_bound"] = d->bookkeeping["chain_bound"];
  } else {
    const auto lo = number_list(c.str("decompose.cube_lo", ""), "cube_lo");
    const double side = c.get("decompose.side", 0.0);
    if (static_cast<int>(lo.size()) != g->dim()) throw UsageError("cz mode needs --cube-lo with one entry per axis");
    positive(side, "side");
    CZOptions opt;
    opt.rounds = c.get("decompose.rounds", opt.rounds);
    opt.tol = tol;
    const double C1 = c.get("decompose.C1", 0.0);
    if (C1 != 0.0) opt.C1 = C1;
    if (opt.rounds < 1) throw UsageError("rounds must be positive");
    try {
      d = cz_split(*g, Region::cube(to_vec(lo), side), opt);
    } catch (const InputError& e) {
      throw DataError(std::string("cz split: ") + e.what());
    } catch (const ConfigError& e) {
      throw UsageError(std::string("cz split: ") + e.what());
    }
    summary["bound_2C2"] = d->bookkeeping["bound_2C2"];
    summary["C1"] = d->bookkeeping["C1"];
    summary["C2"] = d->bookkeeping["C2"];
    summary["contraction_ok"] = d->bookkeeping["contraction_ok"];
    summary["coefficient_sum_ok"] = d->coefficient_sum <= d->bookkeeping["bound_2C2"].get<double>();
  }

  const bool pass = d->reconstruction_l1 <= 1e-10 && d->residual_l1 <= tail && d->all_valid() &&
                    summary.value("contraction_ok", true) && summary.value("coefficient_sum_ok", true);
  summary["mode"] = mode;
  summary["entries"] = d->entries.size();
  summary["coefficient_sum"] = d->coefficient_sum;
  summary["reconstruction_l1"] = d->reconstruction_l1;
  summary["residual_l1"] = d->residual_l1;
  summary["all_valid"] = d->all_valid();
  summary["pass"] = pass;

  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create output directory " + dir.string());
  json doc = d->to_json("atom");
  doc["config"] = c.echo();
  doc["summary"] = summary;
  open_out(dir / "decomposition.json") << doc.dump(2) << "\n";
  for (std::size_t i = 0; i < d->entries.size(); ++i) save_grid(d->entries[i].atom, dir / ("atom_" + std::to_string(i)));
  save_grid(d->residual, dir / "residual");

  auto csv = open_out(dir / "atoms.csv");
  csv << "index,kind,round,lambda,coefficient,multiple,q,region,pass\n";
  for (std::size_t i = 0; i < d->entries.size(); ++i) {
    const auto& e = d->entries[i];
    csv << i << "," << e.kind << "," << e.round << "," << num(e.lambda) << "," << num(e.coefficient) << ","
        << num(e.multiple) << "," << num(e.q) << "," << (e.region.kind == Region::Kind::Ball ? "ball:" : "cube:")
        << vec_str(e.region.center) << ":" << num(e.region.radius) << "," << (e.report.pass ? "true" : "false")
        << "\n";
  }
  out << summary.dump() << "\n";
  return pass ? kPass : kFail;
}

// ---------------------------------------------------------------- report

struct Row {
  std::string estimate;
  double t;
  std::string x, y;
  double ratio;
};

int cmd_report(const std::vector<std::string>& files, const fs::path& dir, std::ostream& out) {
  std::vector<Row> rows;
  std::vector<std::tuple<std::string, std::string, std::string, std::string>> constants;  // id, system, source, line
  for (const auto& file : files) {
    std::ifstream in(file);
    if (!in) throw DataError("cannot open certificate file " + file);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      EstimateCertificate cert;
      try {
        cert = EstimateCertificate::from_json(json::parse(line));
      } catch (const std::exception& e) {
        throw DataError(file + ":" + std::to_string(lineno) + ": " + e.what());
      }
      const double cc = std::isnan(cert.dilation) ? cert.dilation : 1.0 / cert.dilation;
      constants.emplace_back(cert.id, cert.system, file,
                             cert.id + "," + cert.system + "," + num(cert.C) + "," + num(cc) + "," +
                                 num(cert.worst_ratio) + "," + (cert.pass ? "true" : "false") + "," + file);
      if (cert.curve.empty()) {
        rows.push_back({cert.id, cert.worst_t, vec_str(cert.worst_x), vec_str(cert.worst_y), cert.worst_ratio});
      } else {
        for (const auto& p : cert.curve) rows.push_back({cert.id, p.t, vec_str(p.x), vec_str(p.y), p.ratio});
      }
    }
  }
  auto key = [](double v) { return std::isnan(v) ? -INFINITY : v; };
  std::sort(rows.begin(), rows.end(), [&](const Row& a, const Row& b) {
    return std::make_tuple(a.estimate, key(a.t), a.x, a.y, key(a.ratio)) <
           std::make_tuple(b.estimate, key(b.t), b.x, b.y, key(b.ratio));
  });
  std::sort(constants.begin(), constants.end());

  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create output directory " + dir.string());
  auto csv = open_out(dir / "report.csv");
  csv << "estimate,x,y,t,ratio\n";
  for (const auto& r : rows) csv << r.estimate << "," << r.x << "," << r.y << "," << num(r.t) << "," << num(r.ratio) << "\n";
  auto tab = open_out(dir / "constants.csv");
  tab << "estimate,system,C,c,worst_ratio,pass,source\n";
  for (const auto& c : constants) tab << std::get<3>(c) << "\n";
  out << rows.size() << " curve rows from " << constants.size() << " certificates\n";
  return kPass;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Dunkl heat/Poisson kernel certificates and atomic decompositions"};
  app.require_subcommand(1);

  std::string sweep_file, system, k, estimates, outdir;
  int N = 1, workers = 1;
  unsigned long long seed = 0;
  double tol = 1e-6;

  auto* verify = app.add_subcommand("verify", "certify kernel and measure estimates");
  auto* o_sweep_v = verify->add_option("--sweep-file", sweep_file, "INI configuration");
  auto* o_system = verify->add_option("--system", system, "a1xN, a1x<n>, a2, b2");
  auto* o_N = verify->add_option("--N", N, "dimension for a1xN");
  auto* o_k = verify->add_option("--k", k, "multiplicities, comma separated");
  auto* o_est = verify->add_option("--estimates", estimates, "estimate ids, comma separated");
  auto* o_out_v = verify->add_option("--out", outdir, "output directory");
  auto* o_workers = verify->add_option("--workers", workers, "parallel workers");
  auto* o_seed = verify->add_option("--seed", seed, "random seed for sampled sweep points");
  auto* o_tol_v = verify->add_option("--tol", tol, "quadrature tolerance");

  std::string input, mode, y0, cube_lo;
  double r = 0.0, side = 0.0, budget = 1.0, C1 = 0.0, tail = 1e-5;
  int rounds = 30;
  auto* decompose = app.add_subcommand("decompose", "atomic decomposition of a grid function");
  auto* o_sweep_d = decompose->add_option("--sweep-file", sweep_file, "INI configuration");
  auto* o_input = decompose->add_option("--input", input, "grid function stem (stem.json, stem.csv)");
  auto* o_mode = decompose->add_option("--mode", mode, "chain or cz")->check(CLI::IsMember({"chain", "cz"}));
  auto* o_y0 = decompose->add_option("--y0", y0, "chain: base point, comma separated");
  auto* o_r = decompose->add_option("--r", r, "chain: radius");
  auto* o_budget = decompose->add_option("--budget", budget, "chain: L2 budget constant");
  auto* o_lo = decompose->add_option("--cube-lo", cube_lo, "cz: lower corner, comma separated");
  auto* o_side = decompose->add_option("--side", side, "cz: side length");
  auto* o_rounds = decompose->add_option("--rounds", rounds, "cz: iterations");
  auto* o_C1 = decompose->add_option("--C1", C1, "cz: doubling constant (default: estimated)");
  auto* o_tail = decompose->add_option("--tail", tail, "allowed residual L1 norm");
  auto* o_out_d = decompose->add_option("--out", outdir, "output directory");
  auto* o_tol_d = decompose->add_option("--tol", tol, "validation tolerance");

  std::vector<std::string> files;
  std::string report_out = ".";
  auto* report = app.add_subcommand("report", "merge certificate files into CSV tables");
  report->add_option("files", files, "JSON-lines certificate files");
  report->add_option("--out", report_out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kPass : kUsage;
  }

  try {
    if (report->parsed()) return cmd_report(files, report_out, out);

    Config c;
    if (!sweep_file.empty()) c.load(sweep_file);
    auto over = [&](CLI::Option* o, const std::string& path, const auto& v) {
      if (o->count()) {
        std::ostringstream s;
        s.precision(17);
        s << v;
        c.set(path, s.str());
      }
    };
    (void)o_sweep_v;
    (void)o_sweep_d;
    if (verify->parsed()) {
      over(o_system, "system.name", system);
      over(o_N, "system.N", N);
      over(o_k, "system.k", k);
      over(o_est, "run.estimates", estimates);
      over(o_out_v, "run.out", outdir);
      over(o_workers, "run.workers", workers);
      over(o_seed, "run.seed", seed);
      over(o_tol_v, "run.tol", tol);
      return cmd_verify(c, out, err);
    }
    over(o_input, "decompose.input", input);
    over(o_mode, "decompose.mode", mode);
    over(o_y0, "decompose.y0", y0);
    over(o_r, "decompose.r", r);
    over(o_budget, "decompose.budget", budget);
    over(o_lo, "decompose.cube_lo", cube_lo);
    over(o_side, "decompose.side", side);
    over(o_rounds, "decompose.rounds", rounds);
    over(o_C1, "decompose.C1", C1);
    over(o_tail, "decompose.tail", tail);
    over(o_out_d, "run.out", outdir);
    over(o_tol_d, "run.tol", tol);
    return cmd_decompose(c, out, err);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return kData;
  } catch (const UnsupportedSystem& e) {
    err << "unsupported: " << e.what() << "\n";
    return kUnsupported;
  }
}

}  // namespace dunkl::cli
