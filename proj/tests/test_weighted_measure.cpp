#include <doctest.h>

#include "dunkl/weighted_measure.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace dunkl;

TEST_CASE("weight formula") {
  WeightFunction w0(RootSystem::a1_product({0.0, 0.0}));
  CHECK(w0(vec({0.3, -2.0})) == 1.0);
  for (double k : {0.5, 1.0, 2.3}) {
    WeightFunction w(RootSystem::a1_product({k}));
    for (double x : {-2.0, 0.1, 1.7})
      CHECK(w(vec({x})) == doctest::Approx(std::pow(2.0, k) * std::pow(std::abs(x), 2 * k)).epsilon(1e-14));
    CHECK(w(vec({0.0})) == 0.0);
  }
}

TEST_CASE("weight is G-invariant and homogeneous of degree 2 gamma") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> g;
  for (const auto& rs : {RootSystem::a2(0.7), RootSystem::b2(1.0, 0.4), RootSystem::a1_product({1.0, 2.3})}) {
    WeightFunction w(rs);
    for (int trial = 0; trial < 30; ++trial) {
      Vec x(2);
      x << g(rng), g(rng);
      for (const auto& s : rs.weyl_group())
        CHECK(w(s * x) == doctest::Approx(w(x)).epsilon(1e-12));
      const double t = 0.1 + std::abs(g(rng));
      CHECK(w(t * x) == doctest::Approx(std::pow(t, 2 * rs.gamma()) * w(x)).epsilon(1e-10));
    }
  }
}

TEST_CASE("ball volumes against closed-form oracles") {
  WeightFunction lebesgue(RootSystem::a1_product({0.0}));
  CHECK(lebesgue.ball_volume(vec({3.0}), 0.7).value == doctest::Approx(1.4));

  WeightFunction w(RootSystem::a1_product({1.0}));
  // 2 * int_0^1 2 x^2 dx
  CHECK(w.ball_volume(vec({0.0}), 1.0).value == doctest::Approx(4.0 / 3.0).epsilon(1e-12));
  // int_2^4 2 s^2 ds
  CHECK(w.V(vec({0.0}), vec({3.0}), 1.0) == doctest::Approx(2.0 * (64.0 - 8.0) / 3.0).epsilon(1e-12));
  CHECK(w.V(vec({0.5}), vec({0.5}), 0.3) == doctest::Approx(w.ball_volume(vec({0.5}), 0.3).value));

  // 2D Lebesgue disc
  WeightFunction l2(RootSystem::a1_product({0.0, 0.0}));
  CHECK(l2.ball_volume(vec({1.0, -2.0}), 0.5).value ==
        doctest::Approx(std::numbers::pi * 0.25).epsilon(1e-6));
  // k = 0 non-product construction path gives Lebesgue too
  WeightFunction l2e(RootSystem::a2(0.0));
  CHECK(l2e.ball_volume(vec({1.0, -2.0}), 0.5).value ==
        doctest::Approx(std::numbers::pi * 0.25).epsilon(1e-6));
}

TEST_CASE("product and generic quadrature agree") {
  // B2 with k_long = 0 is the product A1 x A1 written with a non-product construction path
  auto b2 = RootSystem::b2(1.0, 0.0);
  auto prod = RootSystem::a1_product({1.0, 1.0});
  WeightFunction wb(b2), wp(prod);
  CHECK(b2.is_product());
  for (auto c : {vec({0.0, 0.0}), vec({0.4, -1.1}), vec({2.0, 0.1})}) {
    for (double r : {0.3, 1.0}) {
      // box-based generic route over the ball
      QuadSettings q{1e-9, 0.0, 24};
      const double ref = wp.ball_volume(c, r, q).value;
      CHECK(wb.ball_volume(c, r, q).value == doctest::Approx(ref).epsilon(1e-8));
    }
  }
  // generic nested box integral vs closed form
  auto a2 = RootSystem::a2(1.0);
  WeightFunction wa(a2);
  const double m = wa.box_mass(vec({-1.0, -1.0}), vec({1.0, 1.0}), {1e-9, 0.0, 24});
  CHECK(m > 0.0);
}

TEST_CASE("scaling law t^N for ball volumes") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (const auto& rs : {RootSystem::a1_product({1.0}), RootSystem::a1_product({0.5, 1.5}), RootSystem::a2(1.0),
                         RootSystem::b2(0.5, 1.0)}) {
    WeightFunction w(rs);
    QuadSettings q{1e-8, 0.0, 24};
    for (int trial = 0; trial < 6; ++trial) {
      Vec x(rs.dim());
      for (int i = 0; i < rs.dim(); ++i) x(i) = u(rng);
      const double r = 0.2 + std::abs(u(rng));
      const double v1 = w.ball_volume(x, r, q).value;
      const double v2 = w.ball_volume(2.0 * x, 2.0 * r, q).value;
      CHECK(v2 / v1 == doctest::Approx(std::pow(2.0, rs.hom_dim())).epsilon(1e-5));
    }
  }
}

TEST_CASE("ball volume is monotone in the radius") {
  WeightFunction w(RootSystem::a2(1.0));
  double prev = 0.0;
  for (double r = 0.1; r < 3.0; r += 0.2) {
    const double v = w.ball_volume(vec({0.5, 0.2}), r).value;
    CHECK(v > prev);
    prev = v;
  }
}

TEST_CASE("c_k constant") {
  WeightFunction w0(RootSystem::a1_product({0.0}));
  CHECK(c_k_constant(w0) == doctest::Approx(std::sqrt(2 * std::numbers::pi)).epsilon(1e-12));
  WeightFunction w03(RootSystem::a1_product({0.0, 0.0, 0.0}));
  CHECK(c_k_constant(w03) == doctest::Approx(std::pow(2 * std::numbers::pi, 1.5)).epsilon(1e-12));
  WeightFunction w1(RootSystem::a1_product({1.0}));
  CHECK(c_k_constant(w1) == doctest::Approx(2.0 * std::sqrt(2 * std::numbers::pi)).epsilon(1e-12));

  // homogeneity route on a non-product system vs a truncated box quadrature of the Gaussian
  auto a2 = RootSystem::a2(1.0);
  WeightFunction wa(a2);
  const double ck = c_k_constant(wa);
  QuadSettings q{1e-10, 0.0, 24};
  const double R = 9.0;
  auto f = [&](double x) {
    auto g = [&](double y) { return std::exp(-(x * x + y * y) / 2) * wa(vec({x, y})); };
    std::vector<double> br;
    for (const auto& r : a2.roots())
      if (std::abs(r.vector(1)) > 1e-12) br.push_back(-r.vector(0) * x / r.vector(1));
    return integrate(g, -R, R, br, q).value;
  };
  const double direct = integrate(f, -R, R, {0.0}, {1e-9, 0.0, 24}).value;
  CHECK(ck == doctest::Approx(direct).epsilon(1e-7));

  // non-product path on the product system B2(k,0) reproduces the closed form
  WeightFunction wb(RootSystem::explicit_roots(2, {{vec({1, 1}), 1.0}, {vec({-1, -1}), 1.0}, {vec({1, -1}), 1.0},
                                                    {vec({-1, 1}), 1.0}}));
  // rotated A1xA1: same measure as the product system up to rotation
  CHECK(c_k_constant(wb) == doctest::Approx(c_k_product(RootSystem::a1_product({1.0, 1.0}))).epsilon(1e-7));
}

TEST_CASE("measure facts certificates") {
  MeasureSweep sweep;
  for (double x = -4.0; x <= 4.0; x += 0.5) sweep.centers.push_back(vec({x}));
  for (int j = -6; j <= 2; ++j) sweep.radii.push_back(std::pow(2.0, j));

  WeightFunction w0(RootSystem::a1_product({0.0}));
  auto c0 = certify_measure_facts(w0, sweep);
  CHECK(c0[0].C == doctest::Approx(1.0));
  CHECK(c0[1].C == doctest::Approx(2.0));
  for (const auto& c : c0) CHECK(c.pass);

  WeightFunction w1(RootSystem::a1_product({1.0}));
  auto c1 = certify_measure_facts(w1, sweep);
  for (const auto& c : c1) CHECK(c.pass);
  // r (|sqrt2 x| + r)^2 comparability band: bounded, and not degenerate
  CHECK(c1[0].C < 20.0);
  CHECK(c1[2].extra["slope_min"].get<double>() >= 1.0 - 1e-2);
  CHECK(c1[2].extra["slope_max"].get<double>() <= 3.0 + 1e-2);
}
