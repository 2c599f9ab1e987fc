#include "dunkl/atoms.hpp"
#include "dunkl/transform.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>

using namespace dunkl;

namespace {

WeightFunction weight_1d(double k) { return WeightFunction(RootSystem::a1_product({k})); }

Vec v1(double x) { return Vec::Constant(1, x); }

// 2^k |x|^{2k} integrated over [a, b]
double mass_1d(double k, double a, double b) {
  auto F = [k](double z) { return std::pow(2.0, k) * std::pow(std::abs(z), 2 * k + 1) / (2 * k + 1) * (z < 0 ? -1 : 1); };
  return F(b) - F(a);
}

void check_reconstruction(const Decomposition& d, double tail) {
  CHECK(d.reconstruction_l1 <= 1e-10);
  CHECK(d.residual_l1 <= tail);
  for (const auto& e : d.entries) {
    INFO(e.kind << " round " << e.round);
    CHECK(e.report.pass);
  }
}

}  // namespace

TEST_CASE("cw atom validation") {
  SUBCASE("classical atom on B(0,1)") {
    auto w = weight_1d(0.0);
    auto a = WeightedGridFunction::sample(w, v1(-2), v1(2), 6, [](const Vec& x) {
      return x(0) > 0 && x(0) < 1 ? 0.5 : (x(0) > -1 && x(0) < 0 ? -0.5 : 0.0);
    });
    const auto rep = validate_cw_atom(a, Region::ball(v1(0), 1.0), INFINITY);
    CHECK(rep.support_ok);
    CHECK(rep.size_ok);
    CHECK(rep.cancellation_ok);
    CHECK(rep.pass);
    CHECK(rep.size_bound == doctest::Approx(0.5).epsilon(1e-10));
    CHECK(rep.multiple() == doctest::Approx(1.0).epsilon(1e-10));
    // same function at q = 2: ||a||_2 = 1/sqrt 2 = w(B)^{-1/2}
    CHECK(validate_cw_atom(a, Region::ball(v1(0), 1.0), 2.0).pass);
    // support outside a smaller ball
    const auto small = validate_cw_atom(a, Region::ball(v1(0), 0.5), INFINITY);
    CHECK_FALSE(small.support_ok);
    CHECK(small.support_excess == doctest::Approx(0.5 - 2.0 / 32).epsilon(1e-9));
  }
  SUBCASE("cancellation failure is reported") {
    auto w = weight_1d(1.0);
    // int a = 0.1 ||a||_1 with a = p on [0.5,1], -m on [-1,-0.5]
    const double W = mass_1d(1.0, 0.5, 1.0);
    const double p = 0.55 / W, m = 0.45 / W;
    auto a = WeightedGridFunction::sample(w, v1(-1), v1(1), 5, [&](const Vec& x) {
      return x(0) > 0.5 ? p : (x(0) < -0.5 ? -m : 0.0);
    });
    const auto rep = validate_cw_atom(a, Region::ball(v1(0), 1.0), 2.0);
    CHECK(rep.integral == doctest::Approx(0.1 * rep.l1).epsilon(1e-10));
    CHECK_FALSE(rep.cancellation_ok);
    CHECK_FALSE(rep.pass);
    CHECK(rep.support_ok);
  }
  SUBCASE("q must exceed 1") {
    auto w = weight_1d(0.0);
    WeightedGridFunction a(w, v1(0), v1(1), 2);
    CHECK_THROWS_AS(validate_cw_atom(a, Region::ball(v1(0.5), 0.5), 1.0), InputError);
  }
  SUBCASE("cube regions use the sup-norm and exact box mass") {
    WeightFunction w(RootSystem::a1_product({1.0, 0.5}));
    const Region Q = Region::cube(Vec::Constant(2, 0.0), 1.0);
    CHECK(Q.measure(w) == doctest::Approx(mass_1d(1.0, 0, 1) * mass_1d(0.5, 0, 1)).epsilon(1e-12));
    Vec x(2);
    x << 1.2, 0.5;
    CHECK(Q.excess(x) == doctest::Approx(0.2));
  }
}

TEST_CASE("psi profile and kernel") {
  SUBCASE("mean zero against the homogeneous radial measure") {
    for (double N : {1.0, 3.0, 5.5}) {
      PsiProfile psi(N);
      QuadSettings q{1e-13, 0.0, 40};
      const double m = integrate([&](double r) { return std::pow(r, N - 1) * psi(r); }, 0, 0.25, {}, q).value;
      const double l = integrate([&](double r) { return std::pow(r, N - 1) * std::abs(psi(r)); }, 0, 0.25, {}, q).value;
      CHECK(std::abs(m) <= 1e-10 * l);
      CHECK(psi(0.25) == 0.0);
      CHECK(psi(0.3) == 0.0);
    }
  }
  SUBCASE("rank-one fast path matches the generic translation") {
    for (double k : {0.0, 0.5, 1.0, 2.5}) {
      auto rs = RootSystem::a1_product({k});
      PsiKernel K(rs, 40);
      const PsiProfile& p = K.profile();
      for (double t : {0.4, 1.0})
        for (auto [x, y] : {std::pair{0.3, 0.35}, {0.3, -0.32}, {1.0, 0.9}, {0.05, -0.02}, {0.0, 0.1}, {2.0, 2.05}}) {
          const double ref =
              translation_kernel_mu(rs, [&](double r) { return p.at(t, r); }, v1(x), v1(y), 0.25 * t, 1e-11);
          const double got = K(t, v1(x), v1(y));
          INFO("k=" << k << " t=" << t << " x=" << x << " y=" << y);
          CHECK(std::abs(got - ref) <= 1e-6 * (1.0 + std::abs(ref)) * std::pow(t, -1.0 - 2 * k));
        }
    }
  }
  SUBCASE("vanishes beyond the orbit distance t/4") {
    PsiKernel K(RootSystem::a1_product({1.0}));
    CHECK(K(1.0, v1(1.0), v1(1.3)) == 0.0);
    CHECK(K(1.0, v1(1.0), v1(-1.3)) == 0.0);
    CHECK(K(1.0, v1(1.0), v1(1.2)) != 0.0);
  }
  SUBCASE("non-product systems are refused") {
    CHECK_THROWS_AS(PsiKernel(RootSystem::a2(1.0)), UnsupportedSystem);
  }
}

TEST_CASE("tent atoms and pi_Psi") {
  auto w = weight_1d(1.0);
  const auto A = TentAtom::indicator(w, v1(-3), v1(3), 7, v1(2.0), 0.3, 0.06, 2);
  const double wB = mass_1d(1.0, 1.7, 2.3);

  SUBCASE("tent atom is normalized and supported in the tent") {
    CHECK(A.t2_norm_squared() == doctest::Approx(1.0 / wB).epsilon(1e-9));
    const auto c = A.check();
    CHECK(c["pass"].get<bool>());
    for (std::size_t i = 0; i < A.t.size(); ++i) CHECK(A.t[i] < A.r);
  }
  SUBCASE("A = 0 gives g = 0") {
    TentAtom Z = A;
    for (auto& s : Z.slices)
      for (double& x : s.values()) x = 0.0;
    const auto g = pi_psi_apply(PsiKernel(w.system()), Z);
    CHECK(g.norm(INFINITY) == 0.0);
  }
  SUBCASE("k = 0 support grows by at most t/4") {
    auto w0 = weight_1d(0.0);
    const auto A0 = TentAtom::indicator(w0, v1(-3), v1(3), 7, v1(2.0), 0.3, 0.06, 2);
    const auto g = pi_psi_apply(PsiKernel(w0.system()), A0);
    const double h = 6.0 / 128;
    const double reach = 0.3 + 0.25 * A0.t.back() + h;
    for (std::size_t i = 0; i < g.size(); ++i)
      if (g.value(i) != 0.0) CHECK(std::abs(g.center(i)(0) - 2.0) <= reach);
    double l1 = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) l1 += std::abs(g.value(i)) * g.mass(i);
    CHECK(l1 > 0.0);
    CHECK(std::abs(g.integral()) <= 1e-6 * l1);
  }
  SUBCASE("k = 1: mean zero, orbit support, bounded L2 size") {
    const auto g = pi_psi_apply(PsiKernel(w.system()), A);
    double l1 = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) l1 += std::abs(g.value(i)) * g.mass(i);
    CHECK(l1 > 0.0);
    CHECK(std::abs(g.integral()) <= 1e-6 * l1);
    const double h = 6.0 / 128;
    for (std::size_t i = 0; i < g.size(); ++i)
      if (g.value(i) != 0.0) CHECK(std::abs(std::abs(g.center(i)(0)) - 2.0) <= 0.3 + 0.25 * A.t.back() + h);
    const double size = g.norm(2.0) * std::sqrt(wB);
    MESSAGE("||g||_2 w(B)^{1/2} = " << size);
    CHECK(std::isfinite(size));
    CHECK(size < 10.0);
  }
}

TEST_CASE("pi_Psi against direct quadrature of the double integral") {
  // cell average of sum_t log_step A_t int_cell int_supp Psi_t(x, y) dw(y) dw(x), with the
  // generic translation integral and fixed composite Gauss rules
  auto gl = [](const std::function<double(double)>& f, double a, double b, double len) {
    if (b <= a) return 0.0;
    const int m = std::max(1, static_cast<int>(std::ceil((b - a) / len)));
    const double st = (b - a) / m;
    const Rule r = gauss_legendre(12, 0, 1);
    double s = 0;
    for (int i = 0; i < m; ++i)
      for (std::size_t j = 0; j < r.nodes.size(); ++j) s += st * r.weights[j] * f(a + st * (i + r.nodes[j]));
    return s;
  };
  for (double k : {0.0, 1.0}) {
    auto w = weight_1d(k);
    const auto A = TentAtom::indicator(w, v1(-3), v1(3), 7, v1(2.0), 0.3, 0.06, 2);
    PsiKernel K(w.system());
    const auto g = pi_psi_apply(K, A);
    std::size_t best = 0;
    for (std::size_t i = 0; i < g.size(); ++i)
      if (std::abs(g.value(i)) > std::abs(g.value(best))) best = i;
    const PsiProfile& p = K.profile();
    for (std::size_t c : {best, best + 1, best + 3}) {
      double tot = 0;
      for (std::size_t i = 0; i < A.t.size(); ++i) {
        const double t = A.t[i];
        Vec lo, hi;
        if (!A.slices[i].support_box(lo, hi)) continue;
        const double val = A.slices[i].value(A.slices[i].locate(v1(2.0)));
        auto inner = [&](double x) {
          const double ya = std::max(lo(0), std::abs(x) - 0.25 * t), yb = std::min(hi(0), std::abs(x) + 0.25 * t);
          return gl([&](double y) {
            return translation_kernel_mu(w.system(), [&](double r) { return p.at(t, r); }, v1(x), v1(y), 0.25 * t, 1e-10) *
                   w.axis_weight(0, y);
          }, ya, yb, t / 16);
        };
        tot += A.log_step * val * gl([&](double x) { return inner(x) * w.axis_weight(0, x); }, g.cell_lo(c)(0), g.cell_hi(c)(0), t / 8);
      }
      INFO("k=" << k << " cell " << c);
      CHECK(g.value(c) == doctest::Approx(tot / g.mass(c)).epsilon(1e-5));
    }
  }
}

TEST_CASE("lemma bounds") {
  auto w = weight_1d(1.0);
  PsiKernel K(w.system());
  const PiPsiOptions opt;
  Mat flip = -Mat::Identity(1, 1);

  SUBCASE("y0 = 2, r = 0.3, sign flip: both ratios finite") {
    const auto A = TentAtom::indicator(w, v1(-3), v1(3), 7, v1(2.0), 0.3, 0.06, 2);
    const auto rep = check_lemma_bounds(K, A, flip, opt);
    MESSAGE(rep.to_json().dump());
    CHECK_FALSE(rep.skipped);
    CHECK(rep.gap == doctest::Approx(4.0));
    CHECK(rep.pass);
    CHECK(rep.l2_on_ball > 0.0);
    CHECK(std::isfinite(rep.pointwise_ratio));
    CHECK(std::isfinite(rep.l2_ratio));
    // same report when sigma is chosen automatically
    const auto autorep = check_lemma_bounds(K, A, opt);
    CHECK(autorep.l2_ratio == doctest::Approx(rep.l2_ratio).epsilon(1e-12));
  }
  SUBCASE("gap not above 4r is skipped") {
    const auto A = TentAtom::indicator(w, v1(-3), v1(3), 7, v1(0.5), 0.3, 0.06, 2);
    const auto rep = check_lemma_bounds(K, A, flip, opt);
    CHECK(rep.skipped);
    CHECK_FALSE(rep.reason.empty());
  }
  SUBCASE("trivial group is skipped") {
    auto w0 = weight_1d(0.0);
    const auto A = TentAtom::indicator(w0, v1(-3), v1(3), 6, v1(2.0), 0.3, 0.1, 2);
    const auto rep = check_lemma_bounds(PsiKernel(w0.system()), A, opt);
    CHECK(rep.skipped);
  }
  SUBCASE("doubling r scales the L2 side like the bound") {
    // bound w(B)^{-1/2} r^2 / gap^2: ratio 4 sqrt(w(B_r) / w(B_2r))
    const double r = 0.3;
    const auto A1 = TentAtom::indicator(w, v1(-3.2), v1(3.2), 7, v1(2.0), r, r / 5, 2);
    const auto A2 = TentAtom::indicator(w, v1(-3.2), v1(3.2), 7, v1(2.0), 2 * r, 2 * r / 5, 2);
    const auto R1 = check_lemma_bounds(K, A1, flip, opt);
    const auto R2 = check_lemma_bounds(K, A2, flip, opt);
    const double expect = 4.0 * std::sqrt(mass_1d(1.0, 2 - r, 2 + r) / mass_1d(1.0, 2 - 2 * r, 2 + 2 * r));
    const double got = R2.l2_on_ball / R1.l2_on_ball;
    MESSAGE("L2 scaling " << got << " vs bound scaling " << expect);
    CHECK(got == doctest::Approx(expect).epsilon(0.2));
  }
}

TEST_CASE("chain decomposition") {
  SUBCASE("dipole y0 = 3, r = 0.25 on the sign-flip orbit") {
    auto w = weight_1d(1.0);
    const double y0 = 3.0, r = 0.25, d = 6.0;
    const double wB = mass_1d(1.0, y0 - r, y0 + r);
    const double amp = r * r / (d * d) / wB;
    auto g = WeightedGridFunction::sample(w, v1(-4), v1(4), 7, [&](const Vec& x) {
      if (std::abs(x(0) - y0) < r) return amp;
      if (std::abs(x(0) + y0) < r) return -amp;
      return 0.0;
    });
    const auto D = chain_decompose(g, v1(y0), r);
    const auto& bk = D.bookkeeping;
    CHECK(bk["orbit"][1]["m_j"].get<long>() == 24);
    CHECK(bk["chain_coefficient_sum"].get<double>() == doctest::Approx(1.0 / 24).epsilon(1e-12));
    CHECK(bk["chain_coefficient_sum"].get<double>() <= bk["chain_bound"].get<double>() + 1e-12);
    CHECK(bk["chain_bound"].get<double>() == 0.5);
    CHECK(bk["orbit"][1]["spacing_ok"].get<bool>());
    const double cj = bk["orbit"][1]["c_j"].get<double>();
    CHECK(std::abs(cj) <= bk["orbit"][1]["c_bound"].get<double>() * (1 + 1e-9));
    CHECK(D.residual_l1 <= 1e-10);
    check_reconstruction(D, 1e-10);
    // a_0 and the 23 dipoles; the final atom vanishes here
    CHECK(D.entries.size() == 24);
    for (const auto& e : D.entries) {
      CHECK(std::abs(e.atom.integral()) <= 1e-9 * e.report.l1);
      CHECK(e.region.radius == 4 * r);
    }
    CHECK(D.coefficient_sum <= 0.5 + bk["final_multiple"].get<double>() + 1e-12);
    const auto js = D.to_json("dip");
    CHECK(js["entries"].size() == 24);
    CHECK(js["entries"][3]["atom"] == "dip_3");
  }
  SUBCASE("trivial group: the input is the single atom") {
    auto w = weight_1d(0.0);
    auto g = WeightedGridFunction::sample(w, v1(-2), v1(2), 6, [](const Vec& x) {
      return x(0) > 0 && x(0) < 0.25 ? 1.0 : (x(0) > -0.25 && x(0) < 0 ? -1.0 : 0.0);
    });
    const auto D = chain_decompose(g, v1(0.0), 0.25, {4.0, 1e-6});
    REQUIRE(D.entries.size() == 1);
    CHECK(D.entries[0].kind == "final");
    CHECK(D.bookkeeping["chain_coefficient_sum"].get<double>() == 0.0);
    check_reconstruction(D, 1e-12);
  }
  SUBCASE("A1 x A1: several far images") {
    WeightFunction w(RootSystem::a1_product({0.5, 1.0}));
    Vec y0(2);
    y0 << 1.5, 1.25;
    const double r = 0.25;
    const double wB = Region::ball(y0, r).grid_mass(WeightedGridFunction(w, Vec::Constant(2, -2), Vec::Constant(2, 2), 5));
    auto g = WeightedGridFunction::sample(w, Vec::Constant(2, -2), Vec::Constant(2, 2), 5, [&](const Vec& x) {
      // + on B(y0), - on the image with both signs flipped, half the budget
      const double amp = 0.5 * r * r / (4 * y0.squaredNorm()) / wB;
      if ((x - y0).norm() <= r) return amp;
      if ((x + y0).norm() <= r) return -amp;
      return 0.0;
    });
    const auto D = chain_decompose(g, y0, r);
    check_reconstruction(D, 1e-10);
    CHECK(D.bookkeeping["chain_coefficient_sum"].get<double>() <= 1.0 + 1e-12);
    for (const auto& row : D.bookkeeping["orbit"])
      if (row["in_I"].get<bool>()) CHECK(row["spacing_ok"].get<bool>());
  }
  SUBCASE("input errors") {
    auto w = weight_1d(1.0);
    auto g = WeightedGridFunction::sample(w, v1(-4), v1(4), 7,
                                          [&](const Vec& x) { return std::abs(x(0) - 3) < 0.25 ? 1e-3 : 0.0; });
    CHECK_THROWS_AS(chain_decompose(g, v1(3.0), 0.25), InputError);  // no cancellation
    auto h = WeightedGridFunction::sample(w, v1(-4), v1(4), 7, [&](const Vec& x) {
      return std::abs(x(0) - 3) < 0.25 ? 1.0 : (std::abs(x(0) + 3) < 0.25 ? -1.0 : 0.0);
    });
    CHECK_THROWS_AS(chain_decompose(h, v1(3.0), 0.25), InputError);  // over budget
    auto o = WeightedGridFunction::sample(w, v1(-4), v1(4), 7, [&](const Vec& x) {
      return std::abs(x(0) - 3) < 0.25 ? 1e-4 : (std::abs(x(0) - 1) < 0.25 ? -1e-4 : 0.0);
    });
    CHECK_THROWS_AS(chain_decompose(o, v1(3.0), 0.25), InputError);  // outside the orbit
  }
}

TEST_CASE("C1 estimates") {
  SUBCASE("Lebesgue: 2^N") {
    for (int N : {1, 2}) {
      std::vector<double> ks(static_cast<std::size_t>(N), 0.0);
      WeightFunction w(RootSystem::a1_product(ks));
      const auto e = estimate_C1(w, {Region::cube(Vec::Constant(N, -1.0), 2.0), Region::cube(Vec::Constant(N, 0.3), 0.5)});
      CHECK(e.max_ratio == doctest::Approx(std::pow(2.0, N)).epsilon(1e-12));
      CHECK(e.C1 == doctest::Approx(1.1 * e.max_ratio));
      CHECK(e.pairs == 2u << N);
    }
  }
  SUBCASE("k = 1: [-1,1] over [0,1] is 2, far cubes approach 2") {
    auto w = weight_1d(1.0);
    CHECK(estimate_C1(w, {Region::cube(v1(-1), 2.0)}).max_ratio == doctest::Approx(2.0).epsilon(1e-12));
    const double far = estimate_C1(w, {Region::cube(v1(100), 1.0)}).max_ratio;
    // closed form: the lighter half [100, 100.5]
    CHECK(far == doctest::Approx((std::pow(101, 3) - 1e6) / (std::pow(100.5, 3) - 1e6)).epsilon(1e-10));
    CHECK(std::abs(far - 2.0) < 0.01);
  }
  SUBCASE("grid version: cube at the wall gives 2^{2k+1}") {
    auto w = weight_1d(1.0);
    WeightedGridFunction grid(w, v1(0), v1(1), 6);
    const auto e = estimate_C1(w, grid, Region::cube(v1(0), 1.0));
    CHECK(e.max_ratio == doctest::Approx(8.0).epsilon(1e-9));
  }
}

TEST_CASE("Calderon-Zygmund splitting") {
  auto sums_ok = [](const Decomposition& D) {
    const auto& bk = D.bookkeeping;
    CHECK(bk["contraction_ok"].get<bool>());
    for (const auto& r : bk["rounds"]) CHECK(r["mass_out"].get<double>() <= 0.5 * r["mass_in"].get<double>());
    CHECK(bk["good_bound_ok"].get<bool>());
    CHECK(bk["max_stopping_mass_ratio"].get<double>() <= 1.0 + 1e-12);
    CHECK(bk["stopping_upper"].get<double>() < bk["C1"].get<double>());
    CHECK(D.coefficient_sum <= bk["bound_2C2"].get<double>());
    for (const auto& e : D.entries) CHECK(std::isinf(e.q));
  };

  SUBCASE("spike atom, k = 0, Q = [0,1]") {
    auto w = weight_1d(0.0);
    const int level = 10;
    const double h = std::ldexp(1.0, -level), c = 1.0 / std::sqrt(2 * h);
    auto a = WeightedGridFunction::sample(w, v1(0), v1(1), level, [&](const Vec& x) {
      return x(0) < h ? c : (x(0) < 2 * h ? -c : 0.0);
    });
    CZOptions opt;
    opt.rounds = 20;
    const auto D = cz_split(a, Region::cube(v1(0), 1.0), opt);
    MESSAGE(D.bookkeeping["rounds"].dump());
    CHECK(D.bookkeeping["rounds"][0]["stopping_cubes"].get<std::size_t>() == 1);
    check_reconstruction(D, 1e-5);
    sums_ok(D);
  }
  SUBCASE("near-wall atom, k = 1") {
    auto w = weight_1d(1.0);
    const int level = 9;
    WeightedGridFunction grid(w, v1(0), v1(1), level);
    // a = c (chi_I - (w(I)/w(J)) chi_J) with I, J cells near 1/2; plus a spread part near 0
    const double h = grid.cell_size()(0);
    auto raw = WeightedGridFunction::sample(w, v1(0), v1(1), level, [&](const Vec& x) {
      if (x(0) > 0.5 && x(0) < 0.5 + h) return 1.0;
      if (x(0) > 0.5 + h && x(0) < 0.5 + 2 * h) return -mass_1d(1, 0.5, 0.5 + h) / mass_1d(1, 0.5 + h, 0.5 + 2 * h);
      if (x(0) < 0.25) return 0.2;
      if (x(0) < 0.5) return -0.2 * mass_1d(1, 0, 0.25) / mass_1d(1, 0.25, 0.5);
      return 0.0;
    });
    const double scale = 1.0 / (raw.norm(2.0) * std::sqrt(mass_1d(1, 0, 1)));
    for (double& v : raw.values()) v *= scale;
    const auto D = cz_split(raw, Region::cube(v1(0), 1.0));
    CHECK(D.bookkeeping["rounds"][0]["stopping_cubes"].get<std::size_t>() >= 1);
    check_reconstruction(D, 1e-5);
    sums_ok(D);
  }
  SUBCASE("two dimensions") {
    WeightFunction w(RootSystem::a1_product({0.5, 0.0}));
    const int level = 5;
    const double h = std::ldexp(1.0, -level);
    auto raw = WeightedGridFunction::sample(w, Vec::Constant(2, 0), Vec::Constant(2, 1), level, [&](const Vec& x) {
      if (x(1) > h) return 0.0;
      return x(0) > 0.5 && x(0) < 0.5 + h ? 1.0 : 0.0;
    });
    // subtract the mean against dw to get cancellation
    const double m = raw.integral() / raw.total_mass();
    for (double& v : raw.values()) v -= m;
    const double scale = 1.0 / (raw.norm(2.0) * std::sqrt(raw.total_mass()));
    for (double& v : raw.values()) v *= scale;
    const auto D = cz_split(raw, Region::cube(Vec::Constant(2, 0), 1.0));
    check_reconstruction(D, 1e-5);
    sums_ok(D);
  }
  SUBCASE("flat atom: no stopping cubes, b1 = a") {
    auto w = weight_1d(0.0);
    auto a = WeightedGridFunction::sample(w, v1(0), v1(1), 6, [](const Vec& x) { return x(0) < 0.5 ? 1.0 : -1.0; });
    const auto D = cz_split(a, Region::cube(v1(0), 1.0));
    REQUIRE(D.entries.size() == 1);
    CHECK(D.bookkeeping["rounds"][0]["stopping_cubes"].get<std::size_t>() == 0);
    CHECK(D.entries[0].lambda == doctest::Approx(1.0));
    CHECK(D.entries[0].report.pass);
    check_reconstruction(D, 0.0);
  }
  SUBCASE("preconditions") {
    auto w = weight_1d(0.0);
    auto a = WeightedGridFunction::sample(w, v1(0), v1(1), 6, [](const Vec& x) { return x(0) < 0.5 ? 1.0 : -1.0; });
    CHECK_THROWS_AS(cz_split(a, Region::cube(v1(0), 0.75)), InputError);
    CHECK_THROWS_AS(cz_split(a, Region::cube(v1(0.01), 0.5)), InputError);
    auto big = a;
    for (double& v : big.values()) v *= 2;
    CHECK_THROWS_AS(cz_split(big, Region::cube(v1(0), 1.0)), InputError);
    CZOptions bad;
    bad.C1 = 0.5;
    CHECK_THROWS_AS(cz_split(a, Region::cube(v1(0), 1.0), bad), ConfigError);
  }
}
