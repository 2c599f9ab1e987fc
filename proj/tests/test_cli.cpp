#include "cli.hpp"

#include "dunkl/grid_operators.hpp"

#include <doctest.h>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

using namespace dunkl;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "dunkl-cli");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("dunkl_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::string> lines(const fs::path& p) {
  std::vector<std::string> v;
  std::ifstream in(p);
  for (std::string l; std::getline(in, l);) v.push_back(l);
  return v;
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

Vec v1(double x) { return Vec::Constant(1, x); }

double mass_1d(double k, double a, double b) {
  auto F = [k](double z) { return std::pow(2.0, k) * std::pow(std::abs(z), 2 * k + 1) / (2 * k + 1) * (z < 0 ? -1 : 1); };
  return F(b) - F(a);
}

}  // namespace

TEST_CASE("verify: heat2 and poisson_dim1 in one dimension") {
  const auto dir = scratch("verify1");
  const auto r = run({"verify", "--system", "a1xN", "--N", "1", "--k", "1", "--estimates", "heat2,poisson_dim1", "--out",
                      dir.string()});
  INFO(r.err);
  CHECK(r.code == cli::kPass);
  const auto jl = lines(dir / "certificates.jsonl");
  REQUIRE(jl.size() == 2);
  const auto a = json::parse(jl[0]), b = json::parse(jl[1]);
  CHECK(a["id"] == "heat2");
  CHECK(b["id"] == "poisson_dim1");
  CHECK(a["pass"] == true);
  CHECK(b["pass"] == true);
  CHECK(a["config"]["system"]["name"] == "a1xN");
  CHECK(a["config"]["system"]["k"] == "1");
  CHECK(a["config"]["heat"].contains("t_min"));
  const auto csv = lines(dir / "aggregate.csv");
  REQUIRE(csv.size() == 3);
  CHECK(csv[0].rfind("estimate,", 0) == 0);
  CHECK(csv[1].rfind("heat2,a1x1,pass,", 0) == 0);
  CHECK(json::parse(slurp(dir / "config.json"))["run"]["estimates"] == "heat2,poisson_dim1");
}

TEST_CASE("verify: scope and usage errors") {
  const auto dir = scratch("verify_err");
  SUBCASE("a2 has no exact heat kernel") {
    const auto r = run({"verify", "--system", "a2", "--estimates", "heat2", "--out", dir.string()});
    CHECK(r.code == cli::kUnsupported);
    CHECK(r.err.find("heat2") != std::string::npos);
    CHECK(lines(dir / "aggregate.csv").at(1).find("unsupported") != std::string::npos);
  }
  SUBCASE("measure facts do not need the heat kernel") {
    const auto r = run({"verify", "--system", "a2", "--estimates", "measure_doubling", "--out", dir.string()});
    INFO(r.err);
    CHECK(r.code == cli::kPass);
  }
  SUBCASE("empty estimate list") { CHECK(run({"verify", "--estimates", "", "--out", dir.string()}).code == cli::kUsage); }
  SUBCASE("no estimate list") { CHECK(run({"verify", "--out", dir.string()}).code == cli::kUsage); }
  SUBCASE("unknown estimate") {
    const auto r = run({"verify", "--estimates", "heat7", "--out", dir.string()});
    CHECK(r.code == cli::kUsage);
    CHECK(r.err.find("heat7") != std::string::npos);
  }
  SUBCASE("bad tolerance, workers, k, system") {
    CHECK(run({"verify", "--estimates", "heat2", "--tol", "0"}).code == cli::kUsage);
    CHECK(run({"verify", "--estimates", "heat2", "--tol", "-1e-3"}).code == cli::kUsage);
    CHECK(run({"verify", "--estimates", "heat2", "--workers", "0"}).code == cli::kUsage);
    CHECK(run({"verify", "--estimates", "heat2", "--k", "1,x"}).code == cli::kUsage);
    CHECK(run({"verify", "--estimates", "heat2", "--system", "e8"}).code == cli::kUsage);
    CHECK(run({"verify", "--estimates", "heat2", "--system", "a1xq"}).code == cli::kUsage);
  }
  SUBCASE("unknown flag and missing subcommand") {
    CHECK(run({"verify", "--bogus"}).code == cli::kUsage);
    CHECK(run({}).code == cli::kUsage);
  }
  SUBCASE("help") { CHECK(run({"verify", "--help"}).code == cli::kPass); }
  SUBCASE("empty sweep ranges") {
    const auto ini = dir / "bad.ini";
    write(ini, "[heat]\nlo = 2\nhi = 1\n");
    CHECK(run({"verify", "--estimates", "heat2", "--sweep-file", ini.string()}).code == cli::kUsage);
    write(ini, "[heat]\nt_min = 0\n");
    CHECK(run({"verify", "--estimates", "heat2", "--sweep-file", ini.string()}).code == cli::kUsage);
    write(ini, "[heat]\npoints = many\n");
    CHECK(run({"verify", "--estimates", "heat2", "--sweep-file", ini.string()}).code == cli::kUsage);
  }
  SUBCASE("unparseable config file") {
    const auto ini = dir / "broken.ini";
    write(ini, "[system\nname = a2\n");
    CHECK(run({"verify", "--sweep-file", ini.string()}).code == cli::kUsage);
    CHECK(run({"verify", "--sweep-file", (dir / "absent.ini").string()}).code == cli::kUsage);
  }
}

TEST_CASE("verify: config file, flag overrides, explicit roots") {
  const auto dir = scratch("verify_ini");
  const auto ini = dir / "c.ini";
  write(ini,
        "[system]\nname = a1xN\nN = 1\nk = 0.5\n"
        "[run]\nestimates = heat_radial\n"
        "[heat]\npoints = 9\nt_per_octave = 2\n");
  auto r = run({"verify", "--sweep-file", ini.string(), "--k", "1", "--out", (dir / "o").string()});
  INFO(r.err);
  CHECK(r.code == cli::kPass);
  const auto cfg = json::parse(slurp(dir / "o" / "config.json"));
  CHECK(cfg["system"]["k"] == "1");
  CHECK(cfg["heat"]["points"] == 9);
  CHECK(cfg["heat"]["t_per_octave"] == 2);
  CHECK(json::parse(lines(dir / "o" / "certificates.jsonl").at(0))["system"] == "a1x1");

  // explicit roots: two orthogonal roots of different length are A1 x A1
  write(ini,
        "[system]\nname = explicit\nroots = 1,0:1; -1,0:1; 0,3:0.5; 0,-3:0.5\n"
        "[run]\nestimates = measure_doubling\n");
  r = run({"verify", "--sweep-file", ini.string(), "--out", (dir / "e").string()});
  INFO(r.err);
  CHECK(r.code == cli::kPass);
  write(ini, "[system]\nname = explicit\nroots = 1,0\n[run]\nestimates = measure_doubling\n");
  CHECK(run({"verify", "--sweep-file", ini.string(), "--out", (dir / "e").string()}).code == cli::kUsage);
}

TEST_CASE("verify: outputs are byte-identical for a fixed seed and any worker count") {
  const auto dir = scratch("determinism");
  const auto ini = dir / "c.ini";
  write(ini, "[heat]\nrandom_points = 4\npoints = 7\n[poisson]\nrandom_points = 3\npoints = 7\n");
  auto go = [&](const std::string& name, const std::string& workers, const std::string& seed) {
    const auto r = run({"verify", "--system", "a1xN", "--N", "2", "--k", "1,0.5", "--estimates",
                        "heat2,heat_radial,poisson_up,measure_growth", "--sweep-file", ini.string(), "--workers",
                        workers, "--seed", seed, "--out", (dir / name).string()});
    INFO(r.err);
    CHECK(r.code != cli::kUsage);
    return r.code;
  };
  const int c1 = go("a", "1", "7");
  const int c2 = go("b", "3", "7");
  CHECK(c1 == c2);
  for (const char* f : {"certificates.jsonl", "aggregate.csv"}) CHECK(slurp(dir / "a" / f) == slurp(dir / "b" / f));
  // same run again
  go("a2", "1", "7");
  auto cfg = [&](const char* name) {
    auto j = json::parse(slurp(dir / name / "config.json"));
    j["run"].erase("out");
    return j;
  };
  CHECK(slurp(dir / "a" / "certificates.jsonl") == slurp(dir / "a2" / "certificates.jsonl"));
  CHECK(cfg("a") == cfg("a2"));
  go("c", "1", "8");
  CHECK(slurp(dir / "a" / "certificates.jsonl") != slurp(dir / "c" / "certificates.jsonl"));
}

TEST_CASE("decompose: chain mode on the dipole") {
  const auto dir = scratch("chain");
  WeightFunction w(RootSystem::a1_product({1.0}));
  const double y0 = 3.0, r = 0.25;
  const double amp = r * r / 36.0 / mass_1d(1.0, y0 - r, y0 + r);
  WeightedGridFunction::sample(w, v1(-4), v1(4), 7, [&](const Vec& x) {
    if (std::abs(x(0) - y0) < r) return amp;
    if (std::abs(x(0) + y0) < r) return -amp;
    return 0.0;
  }).save((dir / "dipole").string());

  const auto res = run({"decompose", "--input", (dir / "dipole").string(), "--mode", "chain", "--y0", "3", "--r", "0.25",
                        "--out", (dir / "o").string()});
  INFO(res.err);
  CHECK(res.code == cli::kPass);
  const auto doc = json::parse(slurp(dir / "o" / "decomposition.json"));
  CHECK(doc["entries"].size() == 24);
  CHECK(doc["bookkeeping"]["orbit"][1]["m_j"] == 24);
  CHECK(doc["summary"]["chain_coefficient_sum"].get<double>() == doctest::Approx(1.0 / 24).epsilon(1e-12));
  CHECK(doc["summary"]["chain_bound"].get<double>() == 0.5);
  CHECK(doc["summary"]["all_valid"] == true);
  CHECK(doc["config"]["decompose"]["mode"] == "chain");
  CHECK(fs::exists(dir / "o" / "atom_23.csv"));
  CHECK(fs::exists(dir / "o" / "residual.json"));
  CHECK(lines(dir / "o" / "atoms.csv").size() == 25);
  const auto a0 = WeightedGridFunction::load((dir / "o" / "atom_0").string());
  CHECK(a0.size() == 128);

  SUBCASE("missing y0 is a usage error") {
    CHECK(run({"decompose", "--input", (dir / "dipole").string(), "--mode", "chain", "--r", "0.25"}).code == cli::kUsage);
  }
  SUBCASE("a base point off the support is a data error") {
    CHECK(run({"decompose", "--input", (dir / "dipole").string(), "--mode", "chain", "--y0", "0.1", "--r", "0.05",
               "--out", (dir / "p").string()})
              .code == cli::kData);
  }
}

TEST_CASE("decompose: cz mode on a spike atom") {
  const auto dir = scratch("cz");
  WeightFunction w(RootSystem::a1_product({0.0}));
  const int level = 10;
  const double h = std::ldexp(1.0, -level), c = 1.0 / std::sqrt(2 * h);
  WeightedGridFunction::sample(w, v1(0), v1(1), level, [&](const Vec& x) {
    return x(0) < h ? c : (x(0) < 2 * h ? -c : 0.0);
  }).save((dir / "spike").string());
  const auto res = run({"decompose", "--input", (dir / "spike").string(), "--mode", "cz", "--cube-lo", "0", "--side", "1",
                        "--rounds", "20", "--out", (dir / "o").string()});
  INFO(res.err);
  INFO(res.out);
  CHECK(res.code == cli::kPass);
  const auto s = json::parse(slurp(dir / "o" / "decomposition.json"))["summary"];
  CHECK(s["coefficient_sum"].get<double>() <= s["bound_2C2"].get<double>());
  CHECK(s["coefficient_sum_ok"] == true);
  CHECK(s["reconstruction_l1"].get<double>() <= 1e-10);
  CHECK(s["residual_l1"].get<double>() <= 1e-5);

  SUBCASE("one round leaves a residual above the tail") {
    WeightFunction w2(RootSystem::a1_product({0.5, 0.0}));
    const double h2 = 1.0 / 32;
    auto raw = WeightedGridFunction::sample(w2, Vec::Constant(2, 0), Vec::Constant(2, 1), 5, [&](const Vec& x) {
      return x(1) < h2 && x(0) > 0.5 && x(0) < 0.5 + h2 ? 1.0 : 0.0;
    });
    const double m = raw.integral() / raw.total_mass();
    for (double& v : raw.values()) v -= m;
    const double scale = 1.0 / (raw.norm(2.0) * std::sqrt(raw.total_mass()));
    for (double& v : raw.values()) v *= scale;
    raw.save((dir / "flat2").string());
    auto args = [&](const std::string& rounds) {
      return std::vector<std::string>{"decompose", "--input", (dir / "flat2").string(), "--mode", "cz", "--cube-lo", "0,0",
                                      "--side", "1", "--rounds", rounds, "--out", (dir / ("p" + rounds)).string()};
    };
    CHECK(run(args("30")).code == cli::kPass);
    const auto r1 = run(args("1"));
    INFO(r1.out);
    CHECK(r1.code == cli::kFail);
  }
  SUBCASE("bad mode") {
    CHECK(run({"decompose", "--input", (dir / "spike").string(), "--mode", "wavelet"}).code == cli::kUsage);
  }
}

TEST_CASE("decompose: malformed input") {
  const auto dir = scratch("malformed");
  write(dir / "bad.json", "{\"dim\": 1, \"level\":");
  write(dir / "bad.csv", "1,2\n");
  auto r = run({"decompose", "--input", (dir / "bad").string(), "--mode", "chain", "--y0", "1", "--r", "0.5"});
  CHECK(r.code == cli::kData);
  CHECK(r.err.find("bad") != std::string::npos);
  r = run({"decompose", "--input", (dir / "nothing").string(), "--mode", "chain", "--y0", "1", "--r", "0.5"});
  CHECK(r.code == cli::kData);

  // valid header, truncated values
  WeightFunction w(RootSystem::a1_product({0.0}));
  WeightedGridFunction(w, v1(0), v1(1), 3).save((dir / "short").string());
  write(dir / "short.csv", "0.5\n");
  r = run({"decompose", "--input", (dir / "short").string(), "--mode", "cz", "--cube-lo", "0", "--side", "1"});
  CHECK(r.code == cli::kData);
}

TEST_CASE("report: merge, ordering, empty input, missing files") {
  const auto dir = scratch("report");
  REQUIRE(run({"verify", "--system", "a1xN", "--N", "1", "--k", "1", "--estimates", "poisson_dim1,heat2", "--out",
               (dir / "r1").string()})
              .code == cli::kPass);
  const auto ini = dir / "s.ini";
  write(ini, "[sharpness]\nt_min = 0.0625\nt_max = 1\nt_per_octave = 2\n");
  run({"verify", "--system", "a1xN", "--N", "1", "--k", "1", "--estimates", "product_sharpness,heat_radial",
       "--sweep-file", ini.string(), "--out", (dir / "r2").string()});
  const auto f1 = (dir / "r1" / "certificates.jsonl").string(), f2 = (dir / "r2" / "certificates.jsonl").string();

  REQUIRE(run({"report", f1, f2, "--out", (dir / "a").string()}).code == cli::kPass);
  REQUIRE(run({"report", f2, f1, "--out", (dir / "b").string()}).code == cli::kPass);
  CHECK(slurp(dir / "a" / "report.csv") == slurp(dir / "b" / "report.csv"));
  CHECK(slurp(dir / "a" / "constants.csv") == slurp(dir / "b" / "constants.csv"));

  const auto rows = lines(dir / "a" / "report.csv");
  REQUIRE(rows.size() > 1);
  CHECK(rows[0] == "estimate,x,y,t,ratio");
  CHECK(std::is_sorted(rows.begin() + 1, rows.end(), [](const std::string& a, const std::string& b) {
    return a.substr(0, a.find(',')) < b.substr(0, b.find(','));
  }));
  // the sharpness curve: one row per t in the sweep, 2 per octave from 1/16 to 1
  int sharp = 0;
  for (const auto& l : rows) sharp += l.rfind("product_sharpness,", 0) == 0;
  CHECK(sharp == 9);
  const auto consts = lines(dir / "a" / "constants.csv");
  CHECK(consts.size() == 5);

  CHECK(run({"report", "--out", (dir / "e").string()}).code == cli::kPass);
  CHECK(slurp(dir / "e" / "report.csv") == "estimate,x,y,t,ratio\n");
  CHECK(run({"report", (dir / "none.jsonl").string(), "--out", (dir / "m").string()}).code == cli::kData);
  write(dir / "junk.jsonl", "{not json}\n");
  CHECK(run({"report", (dir / "junk.jsonl").string(), "--out", (dir / "m").string()}).code == cli::kData);
}
