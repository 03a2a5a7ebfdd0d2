#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <random>

#include "rwave/container.hpp"
#include "rwave/flux.hpp"
#include "rwave/slow_grid.hpp"

namespace {

using namespace rwave;

TEST(SlowGrid, SpectralDxExactOnTrigPolynomials) {
  SlowGrid g{8, 16, 1.0, 2.0 * std::numbers::pi};
  const auto a = g.sample([](double t, double x) { return cd(t * std::sin(3 * x), std::cos(5 * x)); });
  const auto d = slow_dx(g, a);
  const auto expect =
      g.sample([](double t, double x) { return cd(3 * t * std::cos(3 * x), -5 * std::sin(5 * x)); });
  EXPECT_LT((d - expect).abs().maxCoeff(), 1e-12);
}

TEST(SlowGrid, SpectralDxRespectsPeriod) {
  SlowGrid g{6, 24, 1.0, 10.0};
  const double k = 2.0 * std::numbers::pi / 10.0;
  const auto a = g.sample([k](double, double x) { return cd(std::cos(2 * k * x)); });
  const auto expect = g.sample([k](double, double x) { return cd(-2 * k * std::sin(2 * k * x)); });
  EXPECT_LT((slow_dx(g, a) - expect).abs().maxCoeff(), 1e-12);
}

double dt_error(int nt) {
  SlowGrid g{nt, 4, 1.0, 2.0 * std::numbers::pi};
  // t^5 vanishes with four derivatives at t = 0, so zero ghosts are consistent.
  const auto a = g.sample([](double t, double) { return cd(std::pow(t, 5) * std::exp(t)); });
  const auto expect = g.sample(
      [](double t, double) { return cd((5 * std::pow(t, 4) + std::pow(t, 5)) * std::exp(t)); });
  return (slow_dt(g, a) - expect).abs().maxCoeff();
}

TEST(SlowGrid, TimeDerivativeIsFourthOrder) {
  const double e1 = dt_error(33), e2 = dt_error(65);
  const double order = std::log2(e1 / e2);
  EXPECT_GT(order, 3.7);
  EXPECT_LT(e2, 1e-4);
}

TEST(SlowGrid, SplineIsExactOnCubics) {
  CubicSplineWeights s(12, 0.0, 0.25);
  Eigen::VectorXd y(12);
  auto f = [](double x) { return 1.0 - 2.0 * x + 0.5 * x * x + 0.3 * x * x * x; };
  for (int i = 0; i < 12; ++i) y(i) = f(0.25 * i);
  for (double x : {0.03, 0.9, 1.37, 2.74}) {
    EXPECT_NEAR(s.weights(x).dot(y), f(x), 1e-12);
    EXPECT_NEAR(s.weights(x, 1).dot(y), -2.0 + x + 0.9 * x * x, 1e-11);
    EXPECT_NEAR(s.weights(x, 2).dot(y), 1.0 + 1.8 * x, 1e-10);
  }
}

TEST(SlowGrid, TrigInterpolationIsExactForBandLimited) {
  const int n = 16;
  const double L = 2.0 * std::numbers::pi;
  Eigen::VectorXd y(n);
  for (int j = 0; j < n; ++j) y(j) = std::cos(3 * j * L / n) + 0.2 * std::sin(7 * j * L / n);
  for (double x : {0.1, 1.234, 5.9}) {
    EXPECT_NEAR(trig_weights(n, L, x).dot(y), std::cos(3 * x) + 0.2 * std::sin(7 * x), 1e-12);
  }
}

TEST(SlowGrid, InterpolatorVanishesForNonPositiveTime) {
  SlowGrid g{16, 8, 1.0, 2.0 * std::numbers::pi};
  SlowInterpolator I(g);
  const auto a = g.sample([](double t, double x) { return cd(t * t + std::cos(x)); });
  EXPECT_EQ(I.apply(I.weights(0.0, 0.3), a), cd(0.0));
  EXPECT_EQ(I.apply(I.weights(-1.0, 0.3), a), cd(0.0));
  EXPECT_NEAR(I.apply(I.weights(0.37, 0.3), a).real(), 0.37 * 0.37 + std::cos(0.3), 1e-12);
}

TEST(Flux, SplitReproducesFullStress) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (double r : {2.5, 3.0, 6.0}) {
    const auto f = decompose_flux(ElasticMedium::from_ratio(r));
    for (int trial = 0; trial < 20; ++trial) {
      const Grad g{u(rng), u(rng), u(rng), u(rng)};
      const Flux full = f.full(g), dec = eval_decomposed(f, g);
      for (int e = 0; e < 4; ++e) EXPECT_NEAR(full[e], dec[e], 1e-13);
    }
  }
}

TEST(Flux, QuadraticPartMatchesSecondDerivative) {
  // Oracle: Q[e][a][b] = (1/2) d^2 P_e / dg_a dg_b at 0, by central differences.
  const auto f = decompose_flux(ElasticMedium::from_ratio(3.0));
  const double h = 1e-3;
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) {
      auto P = [&](double sa, double sb) {
        Grad g{0, 0, 0, 0};
        g[a] += sa;
        g[b] += sb;
        return f.full(g);
      };
      const Flux pp = P(h, h), pm = P(h, -h), mp = P(-h, h), mm = P(-h, -h);
      for (int e = 0; e < 4; ++e) {
        const double d2 = (pp[e] - pm[e] - mp[e] + mm[e]) / (4 * h * h);
        EXPECT_NEAR(f.Q[e][a][b], 0.5 * d2, 1e-6);
      }
    }
}

TEST(Flux, LinearPartIsHookeLaw) {
  const auto f = decompose_flux(ElasticMedium::from_ratio(3.0));
  // Traction column: (u_y + v_x, (r-2) u_x + r v_y)
  const Flux p = f.linear({0.3, 0.5, 0.7, 1.1});
  EXPECT_NEAR(p[1], 0.5 + 0.7, 1e-15);
  EXPECT_NEAR(p[3], 1.0 * 0.3 + 3.0 * 1.1, 1e-15);
}

TEST(Container, RoundTrip) {
  Container c;
  c.kind = "test";
  c.meta = {{"a", 1.5}, {"label", "x"}};
  std::vector<double> re{1.0, 2.0, 3.0, 4.0, 5.0, 6.0};
  std::vector<cd> cx{cd(1, -1), cd(0.5, 2)};
  c.put_real("re", {2, 3}, re.data(), re.size());
  c.put_complex("cx", {2}, cx.data(), cx.size());
  const std::string path = ::testing::TempDir() + "rwave_container_test.bin";
  c.write(path);
  const Container d = Container::read(path);
  EXPECT_EQ(d.kind, "test");
  EXPECT_EQ(d.meta.at("a").get<double>(), 1.5);
  EXPECT_EQ(d.get("re").data, re);
  EXPECT_EQ(d.get("re").shape, (std::vector<std::int64_t>{2, 3}));
  EXPECT_EQ(d.get_complex("cx"), cx);
  EXPECT_THROW(d.get("missing"), ConfigError);
  std::remove(path.c_str());
}

}  // namespace
