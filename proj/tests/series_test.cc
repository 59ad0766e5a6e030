#include <cmath>
#include <random>
#include <thread>

#include <gtest/gtest.h>

#include "conebessel/series.h"
#include "oracles.h"

using namespace conebessel;

namespace {

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

// Interior points with well separated eigenvalues, where every singular
// series converges within a few dozen layers.
SymmetricPoint point3(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> a(0.005, 0.01), b(0.15, 0.25), c(5, 8);
  return elem_sym({a(rng), b(rng), c(rng)});
}

SymmetricPoint point2(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> a(0.1, 0.3), b(1.5, 3);
  return elem_sym({a(rng), b(rng)});
}

double residual_scale(const TFunction& f, const SymmetricPoint& t) { return 1 + std::abs(f(t)); }

// nu with every series parameter at least 0.05 away from a pole.
double generic_nu(std::mt19937_64& rng, double d, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  for (;;) {
    const double v = u(rng);
    bool ok = true;
    for (double s : {1.0, -1.0})
      for (double shift : {0.0, d / 2, d}) {
        const double x = s * v + shift;
        if (std::abs(x - std::round(x)) < 0.05) ok = false;
      }
    if (ok) return v;
  }
}

}  // namespace

TEST(Pochhammer, Examples) {
  EXPECT_EQ(pochhammer(3.7, 0).value(), 1.0);
  EXPECT_NEAR(pochhammer(1.0, 5).value(), 120.0, 1e-12);
  double direct = 1.0;
  for (int i = 0; i < 7; ++i) direct *= -2.5 + i;
  EXPECT_NEAR(pochhammer(-2.5, 7).value(), direct, 1e-13 * std::abs(direct));
  EXPECT_EQ(pochhammer(-3.0, 5).sign, 0);
  EXPECT_EQ(pochhammer(-3.0, 3).sign, -1);
}

TEST(Pochhammer, LargeIndexMatchesProduct) {
  for (double a : {0.3, -4.6, 17.25}) {
    for (int k : {31, 80, 199}) {
      long double lp = 0.0L;
      int s = 1;
      for (int i = 0; i < k; ++i) {
        lp += std::log(std::abs(static_cast<long double>(a) + i));
        if (a + i < 0) s = -s;
      }
      auto p = pochhammer(a, k);
      EXPECT_EQ(p.sign, s);
      EXPECT_NEAR(p.log_abs, static_cast<double>(lp), 1e-12 * (1 + std::abs(static_cast<double>(lp))));
    }
  }
}

TEST(Pochhammer, NaturalReciprocal) {
  EXPECT_EQ(rpochhammer(1.0, -1).sign, 0);
  EXPECT_EQ(rpochhammer(1.0, -40).sign, 0);
  EXPECT_NEAR(rpochhammer(2.5, -2).value(), 1.5 * 0.5, 1e-15);
  EXPECT_NEAR(rpochhammer(0.5, 3).value(), 1.0 / (0.5 * 1.5 * 2.5), 1e-15);
  EXPECT_THROW(rpochhammer(-2.0, 4), DomainError);
  EXPECT_THROW(pochhammer(3.0, -4), DomainError);
  // Gamma-ratio branch for long negative runs.
  long double p = 1.0L;
  for (int i = 1; i <= 45; ++i) p *= 0.3L - i;
  EXPECT_NEAR(rpochhammer(0.3, -45).log_abs, std::log(std::abs(static_cast<double>(p))), 1e-11);
  EXPECT_EQ(rpochhammer(0.3, -45).sign, p < 0 ? -1 : 1);
}

TEST(LogGamma, SignAndPoles) {
  EXPECT_EQ(log_gamma(-0.5).sign, -1);
  EXPECT_EQ(log_gamma(-1.5).sign, 1);
  EXPECT_NEAR(log_gamma(-0.5).value(), std::tgamma(-0.5), 1e-14);
  EXPECT_THROW(log_gamma(-2.0), DomainError);
}

TEST(ElemSym, Examples) {
  auto t = elem_sym({1, 2, 3});
  EXPECT_EQ(t.t, (std::vector<double>{6, 11, 6}));
  t = elem_sym({0.7, 0, 0});
  EXPECT_EQ(t.t, (std::vector<double>{0.7, 0, 0}));
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  for (int k = 0; k < 100; ++k) {
    std::vector<double> x{g(rng), g(rng), g(rng)};
    auto want = oracle::elem_sym_poly(x);
    auto got = elem_sym(std::span<const double>(x));
    for (int i = 0; i < 3; ++i) EXPECT_NEAR(got[i], want[i], 1e-14);
  }
  EXPECT_THROW(elem_sym(std::span<const double>()), UsageError);
}

TEST(J2, Examples) {
  SeriesParams p;
  p.nu = 0.3;
  EXPECT_EQ(j2(1, p, SymmetricPoint{{0.0, 0.0}}).value, 1.0);
  for (double d : {1.0, 2.0, 4.0}) {
    p.d = d;
    for (double t1 : {0.1, 0.7, 2.5}) {
      const double want = oracle::hyp0f1(1 + p.nu + d / 2, -t1);
      EXPECT_LT(rel(j2(1, p, SymmetricPoint{{t1, 0.0}}).value, want), 1e-13);
    }
  }
  p.d = 1;
  const double want = oracle::j2_brute(1, 0.3, 1, 0.2, 0.1, 60);
  EXPECT_LT(rel(j2(1, p, SymmetricPoint{{0.2, 0.1}}).value, want), 1e-12);
}

TEST(J2, BruteForceAgreement) {
  std::mt19937_64 rng(11);
  for (int k = 0; k < 10; ++k) {
    const double d = k % 2 ? 2.0 : 1.0;
    const double nu = generic_nu(rng, d, -2.5, 2.5);
    SeriesParams p{nu, d};
    auto t = point2(rng);
    for (int j : {1, 2}) {
      for (auto kind : {SeriesKind::ordinary, SeriesKind::modified}) {
        const double got = j2(j, p, t, kind).value;
        const double want =
            oracle::j2_brute(j, nu, d, t[0], t[1], 120, kind == SeriesKind::ordinary);
        EXPECT_LT(rel(got, want), 1e-11) << "j=" << j << " nu=" << nu;
      }
    }
  }
}

TEST(J3, Examples) {
  SeriesParams p;
  p.nu = 0.3;
  EXPECT_EQ(j3(1, p, SymmetricPoint{{0.0, 0.0, 0.0}}).value, 1.0);
  p.nu = -1.7;
  p.max_degree = 400;
  const auto got = j3(3, p, SymmetricPoint{{0.3, 0.4, 0.05}});
  const double want = oracle::j3_brute(3, -1.7, 1, 0.3, 0.4, 0.05, 340);
  EXPECT_LT(rel(got.value, want), 1e-11);
}

TEST(J3, BruteForceAgreement) {
  std::mt19937_64 rng(12);
  for (int k = 0; k < 4; ++k) {
    const double d = k % 2 ? 2.0 : 1.0;
    const double nu = generic_nu(rng, d, -2.5, 2.5);
    SeriesParams p{nu, d};
    auto t = point3(rng);
    for (int j = 1; j <= 4; ++j) {
      const double got = j3(j, p, t).value;
      const double want = oracle::j3_brute(j, nu, d, t[0], t[1], t[2], 110);
      EXPECT_LT(rel(got, want), 1e-11) << "j=" << j << " nu=" << nu;
    }
  }
}

TEST(J3, ReductionsToRankTwo) {
  std::mt19937_64 rng(13);
  const double ds[4] = {1, 2, 4, 8};
  for (int k = 0; k < 50; ++k) {
    const double d = ds[k % 4];
    const double h = d / 2;
    const double nu = generic_nu(rng, d, -3, 3);
    auto t2 = point2(rng);
    SymmetricPoint t3{{t2[0], t2[1], 0.0}};
    SeriesParams p3{nu, d}, up{nu + h, d}, down{-nu - h, d};
    const double pw = std::pow(t2[1], -nu - h);
    EXPECT_LT(rel(j3(1, p3, t3).value, j2(1, up, t2).value), 1e-11);
    EXPECT_LT(rel(j3(2, p3, t3).value, j2(2, up, t2).value), 1e-11);
    EXPECT_LT(rel(j3(3, p3, t3).value, pw * j2(1, down, t2).value), 1e-11);
    EXPECT_LT(rel(j3(4, p3, t3).value, pw * j2(2, down, t2).value), 1e-11);
  }
}

TEST(Series, DomainAndGenericity) {
  SeriesParams p{-1.0, 1.0};
  EXPECT_THROW(j2(1, p, SymmetricPoint{{0.1, 0.1}}), NonGenericParameterError);
  p.nu = -1.0 + 1e-8;
  EXPECT_THROW(j2(1, p, SymmetricPoint{{0.1, 0.1}}), NonGenericParameterError);
  p.nu = 0.3;
  EXPECT_THROW(j2(2, p, SymmetricPoint{{-0.1, 0.1}}), DomainError);
  EXPECT_THROW(j3(3, p, SymmetricPoint{{0.1, 0.0, 0.1}}), DomainError);
  EXPECT_THROW(j3(5, p, SymmetricPoint{{0.1, 0.1, 0.1}}), UsageError);
  EXPECT_THROW(j2(1, p, SymmetricPoint{{0.1, 0.1, 0.1}}), UsageError);
  try {
    p.nu = -1.7;
    j3(2, p, elem_sym({1, 1.3, 1.7}));
    FAIL() << "expected no convergence";
  } catch (const NoConvergenceError& e) {
    EXPECT_TRUE(std::isfinite(e.partial()));
    EXPECT_GT(e.terms(), 0);
  }
  try {
    coeffs3(-2.0, 1.0);
    FAIL();
  } catch (const NonGenericParameterError& e) {
    EXPECT_NE(std::string(e.what()).find("Gamma"), std::string::npos);
  }
}

TEST(Series, LayerMonotoneConvergence) {
  std::mt19937_64 rng(14);
  for (int k = 0; k < 5; ++k) {
    auto t = point3(rng);
    for (auto id : all_solutions(3)) {
      SeriesParams loose{0.3, 1.0, 1e-6}, tight{0.3, 1.0, 1e-14};
      auto a = solution(id, loose, t);
      auto b = solution(id, tight, t);
      EXPECT_LE(std::abs(a.value - b.value), a.err) << id.name();
      EXPECT_GE(b.work, a.work);
    }
  }
}

TEST(Series, DeterministicAcrossThreads) {
  SeriesParams p{0.3, 2.0};
  auto s = std::make_shared<JSeries>(SolutionId{3, 4, false}, p);
  std::mt19937_64 rng(15);
  std::vector<SymmetricPoint> pts;
  for (int k = 0; k < 8; ++k) pts.push_back(point3(rng));
  std::vector<double> serial, parallel(pts.size());
  for (auto& t : pts) serial.push_back(solution({3, 4, false}, p, t).value);
  std::vector<std::thread> th;
  for (size_t k = 0; k < pts.size(); ++k)
    th.emplace_back([&, k] { parallel[k] = (*s)(pts[k]).value; });
  for (auto& x : th) x.join();
  for (size_t k = 0; k < pts.size(); ++k) EXPECT_EQ(serial[k], parallel[k]);
}

TEST(Residual, PolynomialControls) {
  SeriesParams p{0.3, 1.0};
  auto t = elem_sym({0.4, 0.9, 1.6});
  TFunction f = [](const SymmetricPoint& s) { return s[0]; };
  EXPECT_NEAR(z_residual(1, f, p, t), (p.nu + 1 + p.d) + t[0], 1e-8);
  EXPECT_NEAR(z_residual(2, f, p, t), 0.0, 1e-8);
  EXPECT_NEAR(z_residual(3, f, p, t), 0.0, 1e-8);
  // t1 t3 exercises the mixed derivative and the A^k table.
  TFunction g = [](const SymmetricPoint& s) { return s[0] * s[2]; };
  EXPECT_NEAR(z_residual(1, g, p, t), 2 * t[2] + (p.nu + 1 + p.d) * t[2] + t[0] * t[2], 1e-8);
  EXPECT_NEAR(z_residual(3, g, p, t), (p.nu + 1) * t[0], 1e-8);
  XFunction one = [](std::span<const double>) { return 1.0; };
  std::vector<double> x{0.4, 0.9, 1.6};
  for (int i = 1; i <= 3; ++i) EXPECT_NEAR(muirhead_residual(i, one, p, x), 1.0, 1e-8);
  std::vector<double> close{0.4, 0.4005};
  EXPECT_THROW(muirhead_residual(1, one, p, close), IllConditionedError);
}

TEST(Residual, ClosedFormHypergeometric) {
  // Rank 1: Z_1 = t d2 + (nu+1) d + 1 annihilates 0F1(; nu+1; -t).
  for (double nu : {0.3, 1.4, 2.2}) {
    SeriesParams p{nu, 1.0};
    TFunction f = [nu](const SymmetricPoint& s) {
      return std::tgamma(nu + 1) * std::pow(s[0], -nu / 2) * std::cyl_bessel_j(nu, 2 * std::sqrt(s[0]));
    };
    for (double t : {0.05, 0.8, 3.0}) {
      SymmetricPoint s{{t}};
      EXPECT_NEAR(oracle::hyp0f1(nu + 1, -t), f(s), 1e-12);
      EXPECT_LT(std::abs(z_residual(1, f, p, s)), 1e-8 * residual_scale(f, s));
    }
  }
}

TEST(Residual, AnnihilationRankTwo) {
  std::mt19937_64 rng(16);
  for (int k = 0; k < 6; ++k) {
    const double d = k % 2 ? 2.0 : 1.0;
    SeriesParams p{0.3, d};
    auto t = point2(rng);
    for (auto id : all_solutions(2)) {
      for (auto kind : {SeriesKind::ordinary, SeriesKind::modified}) {
        auto s = std::make_shared<JSeries>(id, p, kind);
        auto f = fixed_truncation(s, t);
        const int sign = kind == SeriesKind::ordinary ? 1 : -1;
        for (double r : z_residuals(f, p, t, sign))
          EXPECT_LT(std::abs(r), 1e-6 * residual_scale(f, t)) << id.name();
      }
    }
  }
}

TEST(Residual, AnnihilationRankThree) {
  std::mt19937_64 rng(17);
  for (int k = 0; k < 4; ++k) {
    const double d = k % 2 ? 2.0 : 1.0;
    SeriesParams p{k < 2 ? 0.3 : -1.7, d};
    auto t = point3(rng);
    for (auto id : all_solutions(3)) {
      auto kind = k == 3 ? SeriesKind::modified : SeriesKind::ordinary;
      auto s = std::make_shared<JSeries>(id, p, kind);
      auto f = fixed_truncation(s, t);
      for (double r : z_residuals(f, p, t, kind == SeriesKind::ordinary ? 1 : -1))
        EXPECT_LT(std::abs(r), 1e-5 * residual_scale(f, t)) << id.name();
    }
  }
}

TEST(Residual, DisplayedSignsFailTheOtherSystem) {
  // The ordinary series is not a solution with the constant term -1.
  SeriesParams p{0.3, 1.0};
  auto t = elem_sym({0.2, 2.0});
  auto f = fixed_truncation(std::make_shared<JSeries>(SolutionId{2, 1, false}, p), t);
  EXPECT_GT(std::abs(z_residual(1, f, p, t, -1)), 0.1);
}

TEST(Residual, Muirhead) {
  SeriesParams p{0.3, 1.0};
  auto j21 = std::make_shared<JSeries>(SolutionId{2, 1, false}, p);
  XFunction f2 = [&](std::span<const double> x) { return (*j21)(elem_sym(x)).value; };
  std::vector<double> x2{0.4, 0.9};
  for (int i = 1; i <= 2; ++i) EXPECT_LT(std::abs(muirhead_residual(i, f2, p, x2)), 1e-5);
  auto j31 = std::make_shared<JSeries>(SolutionId{3, 1, false}, p);
  XFunction f3 = [&](std::span<const double> x) { return (*j31)(elem_sym(x)).value; };
  std::vector<double> x3{0.3, 0.7, 1.2};
  for (int i = 1; i <= 3; ++i) EXPECT_LT(std::abs(muirhead_residual(i, f3, p, x3)), 1e-5);
  // A singular solution, at separated eigenvalues.
  std::vector<double> xs{0.008, 0.2, 6.0};
  auto j34 = std::make_shared<JSeries>(SolutionId{3, 4, true}, p);
  const int layers = j34->layers_needed(elem_sym(std::span<const double>(xs))) + 6;
  XFunction f4 = [&](std::span<const double> x) { return j34->truncated(elem_sym(x), layers).value; };
  const double scale = 1 + std::abs(f4(xs));
  for (int i = 1; i <= 3; ++i)
    EXPECT_LT(std::abs(muirhead_residual(i, f4, p, xs)), 1e-5 * scale);
}

TEST(Coefficients, ClosedFormTable) {
  for (double d : {1.0, 2.0}) {
    const double nu = -1.7;
    const double h = d / 2, pre = std::pow(2 * M_PI, 1.5 * d);
    auto g = [](double x) { return std::tgamma(x); };
    auto tab = coeffs3(nu, d);
    EXPECT_LT(rel(tab.a[0], pre * g(-nu) * g(-nu - h) * g(-nu - d)), 1e-14);
    EXPECT_LT(rel(tab.a[1], pre * g(-nu) * g(-nu - h) * g(nu + d)), 1e-14);
    EXPECT_LT(rel(tab.a[2], pre * g(-nu) * g(nu + h) * g(nu)), 1e-14);
    EXPECT_LT(rel(tab.a[3], pre * g(-nu) * g(nu + h) * g(-nu)), 1e-14);
    auto neg = coeffs3(-nu, d);
    for (int j = 0; j < 4; ++j) EXPECT_EQ(tab.a[j], neg.b[j]);
  }
  auto c = coeffs2(-0.7, 1.0);
  EXPECT_LT(rel(c[0], std::sqrt(2 * M_PI) * std::tgamma(0.7) * std::tgamma(0.2)), 1e-14);
}

TEST(Coefficients, ChainIdentity) {
  std::mt19937_64 rng(18);
  for (int k = 0; k < 50; ++k) {
    const double d = std::uniform_real_distribution<double>(0.5, 8)(rng);
    const double nu = generic_nu(rng, d, -4, 4);
    try {
      auto tab = coeffs3(nu, d, 1e-3);
      auto c = coeffs2(nu + d / 2, d, 1e-3);
      const double f = std::pow(2 * M_PI, d) * std::tgamma(-nu);
      for (int j = 0; j < 4; ++j) EXPECT_LT(rel(tab.a[j], f * c[j]), 1e-12);
    } catch (const NonGenericParameterError&) {
      // nu + d/2 shifted onto a pole; draw another.
      --k;
    }
  }
}

TEST(KSeries, RankTwoMatchesQuadrature) {
  for (double d : {1.0, 2.0}) {
    for (double nu : {-0.7, 0.45}) {
      for (auto x : {std::pair{0.2, 2.0}, std::pair{0.3, 1.2}}) {
        SeriesParams p{nu, d};
        p.max_degree = 800;
        auto k = k2_series(p, elem_sym({x.first, x.second}));
        const double q = oracle::k2_quadrature(nu, d, x.first, x.second);
        EXPECT_LT(rel(k.value, q), 1e-8) << "d=" << d << " nu=" << nu;
      }
    }
  }
}

TEST(KSeries, RankTwoSymmetry) {
  std::mt19937_64 rng(19);
  for (int k = 0; k < 20; ++k) {
    const double d = k % 2 ? 2.0 : 1.0;
    const double nu = generic_nu(rng, d, -2.5, 2.5);
    auto t = point2(rng);
    const double a = k2_series({nu, d}, t).value;
    const double b = std::pow(t[1], -nu) * k2_series({-nu, d}, t).value;
    EXPECT_LT(rel(a, b), 1e-10);
  }
}

TEST(KSeries, RankThreeSymmetry) {
  std::mt19937_64 rng(20);
  for (int k = 0; k < 20; ++k) {
    const double d = k % 2 ? 2.0 : 1.0;
    const double nu = generic_nu(rng, d, -2.5, 2.5);
    auto t = point3(rng);
    const double a = k3_series({nu, d}, t).value;
    const double b = std::pow(t[2], -nu) * k3_series({-nu, d}, t).value;
    EXPECT_LT(rel(a, b), 1e-9);
  }
}

TEST(KSeries, BoundaryLimit) {
  for (double d : {1.0, 2.0}) {
    const double nu = d == 1 ? -1.7 : -2.3;
    SymmetricPoint t2 = elem_sym({0.2, 2.0});
    SymmetricPoint t3{{t2[0], t2[1], 1e-9}};
    SeriesParams p{nu, d};
    p.max_degree = 400;
    const double lim = std::pow(2 * M_PI, d) * std::tgamma(-nu) *
                       k2_series({nu + d / 2, d}, t2).value;
    EXPECT_LT(rel(k3_series(p, t3).value, lim), 1e-6);
  }
}

TEST(KSeries, SolvesTheNegativeSystem) {
  SeriesParams p{-0.7, 1.0};
  auto t = elem_sym({0.2, 2.0});
  const auto c = coeffs2(p.nu, p.d);
  std::vector<TFunction> parts;
  const SolutionId ids[4] = {{2, 1, false}, {2, 2, false}, {2, 1, true}, {2, 2, true}};
  for (auto id : ids)
    parts.push_back(fixed_truncation(std::make_shared<JSeries>(id, p, SeriesKind::modified), t));
  TFunction k = [&](const SymmetricPoint& s) {
    double v = 0;
    for (int i = 0; i < 4; ++i) v += c[i] * parts[i](s);
    return v;
  };
  for (double r : z_residuals(k, p, t, -1)) EXPECT_LT(std::abs(r), 1e-6 * residual_scale(k, t));
}
