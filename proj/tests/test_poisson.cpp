#include "dunkl/poisson.hpp"

#include <boost/math/special_functions/gamma.hpp>
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace dunkl;

namespace {

const double kPi = std::numbers::pi;

// classical Poisson kernel of the half-space over R^n
double classical(int n, double t, double r) {
  return std::tgamma(0.5 * (n + 1)) / std::pow(kPi, 0.5 * (n + 1)) * t / std::pow(t * t + r * r, 0.5 * (n + 1));
}

// int f(z) 2^k |z|^{2k} dz over the line, z = c + s tan(theta)
double line_integral(double k, const std::function<double(double)>& f, double c, double s, std::vector<double> marks,
                     double tol = 1e-10, double abs_tol = 0.0) {
  std::vector<double> br;
  for (double m : marks) br.push_back(std::atan((m - c) / s));
  auto g = [&](double th) {
    const double z = c + s * std::tan(th);
    const double sec = 1.0 / std::cos(th);
    const double w = k == 0.0 ? 1.0 : std::pow(2.0, k) * std::pow(std::abs(z), 2.0 * k);
    return f(z) * w * s * sec * sec;
  };
  return integrate(g, -0.5 * kPi, 0.5 * kPi, br, QuadSettings{tol, abs_tol, 40}).value;
}

// the subordination integral with an unrelated adaptive rule, u = tan^2(theta)
double subordinated_oracle(const HeatKernel& h, double t, const Vec& x, const Vec& y) {
  auto g = [&](double th) {
    const double tn = std::tan(th), u = tn * tn;
    if (u == 0.0) return 0.0;
    const double sec = 1.0 / std::cos(th);
    // du / sqrt(u) = 2 sec^2 dtheta
    return std::exp(-u) * h(t * t / (4.0 * u), x, y) * 2.0 * sec * sec / std::sqrt(kPi);
  };
  return integrate(g, 0.0, 0.5 * kPi, {std::atan(0.5), std::atan(std::sqrt(t) / 4.0)}, QuadSettings{1e-12, 0.0, 40})
      .value;
}

}  // namespace

TEST_CASE("zero multiplicity gives the classical Poisson kernel") {
  for (int n : {1, 2}) {
    HeatKernel h(RootSystem::a1_product(std::vector<double>(static_cast<std::size_t>(n), 0.0)));
    std::mt19937 rng(11 + n);
    std::uniform_real_distribution<double> pos(-4.0, 4.0), lt(-6.0, 2.0);
    for (int i = 0; i < 40; ++i) {
      Vec x(n), y(n);
      for (int j = 0; j < n; ++j) {
        x(j) = pos(rng);
        y(j) = pos(rng);
      }
      const double t = std::exp2(lt(rng)), r = (x - y).norm();
      CHECK(std::abs(poisson_kernel(h, t, x, y) / classical(n, t, r) - 1.0) < 1e-6);
      if (n == 1) {
        // d/dt of t / (pi (t^2 + r^2))
        const double dq = (r * r - t * t) / (kPi * (t * t + r * r) * (t * t + r * r));
        CHECK(std::abs(q_t_kernel(h, t, x, y) - dq) < 1e-6 * classical(1, t, r) / t);
      }
    }
  }
}

TEST_CASE("Poisson kernel is positive and symmetric") {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> pos(-3.0, 3.0), lt(-6.0, 2.0);
  for (auto k : {std::vector<double>{1.0}, std::vector<double>{0.5}, std::vector<double>{1.0, 1.0}}) {
    HeatKernel h(RootSystem::a1_product(k));
    const int n = h.dim();
    for (int i = 0; i < 20; ++i) {
      Vec x(n), y(n);
      for (int j = 0; j < n; ++j) {
        x(j) = pos(rng);
        y(j) = pos(rng);
      }
      const double t = std::exp2(lt(rng));
      const double a = poisson_kernel(h, t, x, y), b = poisson_kernel(h, t, y, x);
      CHECK(a > 0.0);
      CHECK(std::abs(a - b) <= 1e-10 * a);
    }
  }
}

TEST_CASE("subordination rule") {
  HeatKernel h(RootSystem::a1_product({1.0}));
  const Vec x = vec({0.8}), y = vec({-1.7});
  for (double t : {1.0 / 64.0, 0.3, 4.0}) {
    const auto r = subordination_quadrature(h, t, x, y, 1e-10);
    REQUIRE(r.u.size() == r.weight.size());
    double s = 0.0;
    for (std::size_t i = 0; i < r.u.size(); ++i) {
      CHECK(r.weight[i] > 0.0);
      s += r.weight[i] * h(t * t / (4.0 * r.u[i]), x, y);
    }
    CHECK(std::abs(s - r.value) <= 1e-13 * r.value);
    CHECK(r.tail_bound < 1e-10 * r.value);
    CHECK(r.doubling_change < 1e-7);
    REQUIRE(r.split > 0);
    REQUIRE(r.split < r.u.size());
    CHECK(r.u[r.split - 1] <= 0.25);
    CHECK(r.u[r.split] > 0.25);

    const double oracle = subordinated_oracle(h, t, x, y);
    CHECK(std::abs(r.value / oracle - 1.0) < 1e-8);
    // a looser request lands within the same digits
    CHECK(std::abs(poisson_kernel(h, t, x, y, 1e-7) / r.value - 1.0) < 1e-7);
  }
}

TEST_CASE("Poisson kernel integrates to one") {
  for (double k : {0.0, 0.5, 1.0, 2.3})
    for (double t : {0.1, 1.0})
      for (double x : {0.0, -1.3, 2.0}) {
        HeatKernel h(RootSystem::a1_product({k}));
        const double m = line_integral(k, [&](double z) { return poisson_kernel(h, t, vec({x}), vec({z})); }, 0.0, t,
                                       {0.0, x, -x});
        CHECK(std::abs(m - 1.0) <= 1e-5);
      }
}

TEST_CASE("derivative in t") {
  HeatKernel h(RootSystem::a1_product({1.0}));
  SUBCASE("finite differences") {
    for (double t : {0.05, 0.3, 2.0})
      for (auto [x, y] : {std::pair{0.4, -1.0}, std::pair{1.0, 1.0}, std::pair{-2.0, 0.5}}) {
        const double e = 1e-2 * t;
        auto p = [&](double s) { return poisson_kernel(h, s, vec({x}), vec({y}), 1e-13); };
        const double fd = (-p(t + 2 * e) + 8 * p(t + e) - 8 * p(t - e) + p(t - 2 * e)) / (12 * e);
        const double q = q_t_kernel(h, t, vec({x}), vec({y}), 1e-13);
        CHECK(std::abs(q - fd) <= 1e-5 * std::abs(p(t)) / t);
      }
  }
  SUBCASE("t q_t has mean zero") {
    for (double t : {0.1, 1.0}) {
      const double x = 0.7;
      const double m = line_integral(1.0, [&](double z) { return t * q_t_kernel(h, t, vec({x}), vec({z})); }, 0.0, t,
                                     {0.0, x, -x}, 1e-10, 1e-8);
      CHECK(std::abs(m) <= 1e-5);
    }
  }
}

TEST_CASE("Poisson semigroup") {
  HeatKernel h(RootSystem::a1_product({1.0}));
  for (auto [t, s] : {std::pair{0.2, 0.5}, std::pair{1.0, 1.0}})
    for (auto [x, y] : {std::pair{0.3, -1.1}, std::pair{1.5, 1.5}}) {
      const double conv = line_integral(
          1.0,
          [&](double z) { return poisson_kernel(h, t, vec({x}), vec({z})) * poisson_kernel(h, s, vec({z}), vec({y})); },
          0.0, 1.0, {0.0, x, -x, y, -y});
      const double direct = poisson_kernel(h, t + s, vec({x}), vec({y}));
      CHECK(std::abs(conv - direct) <= 1e-5 * direct);
    }
}

TEST_CASE("Poisson estimate certificates") {
  SUBCASE("classical upper bound") {
    HeatKernel h(RootSystem::a1_product({0.0}));
    auto c = certify_poisson_estimate(h, "poisson_up", PoissonSweep{});
    CHECK(c.pass);
    CHECK(c.C < 10.0);
  }
  SUBCASE("one dimension, k = 1") {
    HeatKernel h(RootSystem::a1_product({1.0}));
    for (const auto& id : {"poisson_up", "poisson_dtdy", "q_bound"}) {
      CAPTURE(id);
      auto c = certify_poisson_estimate(h, id, PoissonSweep{});
      CHECK(c.pass);
      CHECK(c.extra["quadrature"]["max_doubling_change"].get<double>() < 1e-8);
    }
    PoissonSweep dy;
    dy.deriv = DerivSpec{0, -1, 0};
    CHECK(certify_poisson_estimate(h, "poisson_dtdy", dy).pass);
    dy.deriv = DerivSpec{1, -1, 0};
    CHECK(certify_poisson_estimate(h, "poisson_dtdy", dy).pass);
  }
  SUBCASE("logarithmic factor in dimension one") {
    HeatKernel h(RootSystem::a1_product({1.0}));
    auto c = certify_poisson_estimate(h, "poisson_dim1", PoissonSweep{});
    CHECK(c.pass);
    REQUIRE(c.extra["probes"].size() == 1);
    const auto& p = c.extra["probes"][0];
    CHECK(p["ratio_log_free"].get<double>() > 3.0 * p["ratio_log"].get<double>());
    // the log factor at x = 1, y = -1, t = 2^-8 is ln(1 + (2 + t)/t)
    const double t = 1.0 / 256.0;
    CHECK(p["factor"].get<double>() == doctest::Approx(std::log1p((2.0 + t) / t)).epsilon(1e-12));
    CHECK(c.extra["log_free_sup"].get<double>() > c.C);
  }
  SUBCASE("improved bound on a product") {
    HeatKernel h(RootSystem::a1_product({1.0, 1.0}));
    PoissonSweep sw;
    sw.points = 5;
    auto c = certify_poisson_estimate(h, "poisson_new", sw);
    CHECK(c.pass);
    CHECK(std::isfinite(c.C));
  }
  SUBCASE("dimension guard") {
    HeatKernel h(RootSystem::a1_product({1.0}));
    auto c = certify_poisson_estimate(h, "poisson_new", PoissonSweep{});
    CHECK_FALSE(c.pass);
    CHECK_FALSE(c.extra["applies"].get<bool>());
  }
  SUBCASE("bad requests") {
    HeatKernel h(RootSystem::a1_product({1.0}));
    CHECK_THROWS_AS(certify_poisson_estimate(h, "poisson_side", PoissonSweep{}), InputError);
    PoissonSweep sw;
    sw.deriv = DerivSpec{0, 0, -1};
    CHECK_THROWS_AS(certify_poisson_estimate(h, "poisson_dtdy", sw), DomainError);
    CHECK_THROWS_AS(poisson_kernel(h, 0.0, vec({1.0}), vec({1.0})), DomainError);
  }
}
