#include <gtest/gtest.h>

#include <random>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "rwave/exp_poly.hpp"

namespace {

using namespace rwave;

ExpPolyC random_decaying(std::mt19937_64& rng, int nterms = 3, int maxdeg = 2) {
  std::uniform_real_distribution<double> u(-1.0, 1.0), lam(0.3, 2.0);
  ExpPolyC f;
  for (int k = 0; k < nterms; ++k) {
    const cd l(-lam(rng), 0.5 * u(rng));
    for (int p = 0; p <= maxdeg; ++p) f.push(l, p, cd(u(rng), u(rng)));
  }
  return f.normalize();
}

double max_diff(const ExpPolyC& a, const ExpPolyC& b, std::initializer_list<double> ys) {
  double m = 0.0;
  for (double y : ys) m = std::max(m, std::abs(a.eval(y) - b.eval(y)));
  return m;
}

TEST(ExpPolyArith, ExponentsAdd) {
  const cd l1(-1.0, 0.2), l2(-0.5, 0.0);
  const auto a = ExpPolyC::monomial(l1, 1.0, 1);
  const auto b = ExpPolyC::monomial(l2, 1.0, 0);
  const auto p = a * b;
  ASSERT_EQ(p.size(), 1u);
  EXPECT_EQ(p.terms()[0].lambda, l1 + l2);
  EXPECT_EQ(p.terms()[0].degree(), 1);
  EXPECT_EQ(p.terms()[0].c[1], cd(1.0));
}

TEST(ExpPolyArith, ProductRule) {
  const cd l(-0.7, 0.3);
  const auto d = ExpPolyC::monomial(l, 1.0, 1).derivative();
  ExpPolyC expect;
  expect.push(l, 0, 1.0);
  expect.push(l, 1, l);
  expect.normalize();
  EXPECT_LT(max_diff(d, expect, {0.0, 0.5, 2.0}), 1e-15);
}

TEST(ExpPolyArith, Annihilator) {
  std::mt19937_64 rng(1);
  const auto a = random_decaying(rng);
  EXPECT_TRUE((a * ExpPolyC{}).empty());
}

TEST(ExpPolyArith, RingAxioms) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 10; ++trial) {
    const auto a = random_decaying(rng), b = random_decaying(rng), c = random_decaying(rng);
    EXPECT_LT(max_diff((a * b) * c, a * (b * c), {0.0, 0.7, 3.0}), 1e-12);
    EXPECT_LT(max_diff(a * (b + c), a * b + a * c, {0.0, 0.7, 3.0}), 1e-12);
    EXPECT_LT(max_diff(a * b, b * a, {0.0, 0.7, 3.0}), 1e-12);
  }
}

TEST(ExpPolyArith, DeduplicatesExponents) {
  ExpPolyC f;
  f.push(cd(-1.0), 0, 1.0);
  f.push(cd(-1.0 + 1e-14), 0, 2.0);
  f.normalize();
  ASSERT_EQ(f.size(), 1u);
  EXPECT_NEAR(f.terms()[0].c[0].real(), 3.0, 1e-15);
}

TEST(ExpPolyArith, DegreeCap) {
  const auto a = ExpPolyC::monomial(cd(-1.0), 1.0, 10);
  EXPECT_THROW(a * a, DegreeOverflowError);
}

TEST(ExpPolyArith, ConjugationInvolutionAndCommutation) {
  std::mt19937_64 rng(3);
  const auto a = random_decaying(rng), b = random_decaying(rng);
  EXPECT_LT(max_diff(a.conj().conj(), a, {0.0, 1.0, 2.5}), 1e-15);
  const auto lhs = (a * b).conj();
  const auto rhs = a.conj() * b.conj();
  EXPECT_LT(max_diff(lhs, rhs, {0.0, 1.0, 2.5}), 1e-13);
  for (double y : {0.0, 1.3}) {
    EXPECT_LT(std::abs(a.conj().eval(y) - std::conj(a.eval(y))), 1e-14);
    EXPECT_LT(std::abs(a.derivative().conj().eval(y) - a.conj().derivative().eval(y)), 1e-14);
  }
}

TEST(TailIntegral, UnitExponential) {
  const auto f = ExpPolyC::monomial(cd(-1.0), 1.0);
  EXPECT_LT(max_diff(f.tail(), f, {0.0, 1.0, 4.0}), 1e-15);
  EXPECT_LT(max_diff(f.double_tail(), -f, {0.0, 1.0, 4.0}), 1e-15);
}

TEST(TailIntegral, FundamentalTheoremAndQuadrature) {
  std::mt19937_64 rng(4);
  boost::math::quadrature::exp_sinh<double> integrator;
  for (int trial = 0; trial < 5; ++trial) {
    const auto f = random_decaying(rng);
    const auto dd = f.double_tail().derivative().derivative();
    EXPECT_LT(max_diff(dd, -f, {0.0, 0.4, 1.7, 5.0}), 1e-12);
    EXPECT_LT(max_diff(f.tail().derivative(), -f, {0.0, 0.4, 1.7}), 1e-12);
    for (double Y : {0.0, 1.0, 3.0}) {
      auto re = [&](double s) { return f.eval(Y + s).real(); };
      auto im = [&](double s) { return f.eval(Y + s).imag(); };
      const cd q(integrator.integrate(re), integrator.integrate(im));
      EXPECT_LT(std::abs(f.tail().eval(Y) - q), 1e-10);
    }
  }
}

TEST(TailIntegral, DivergenceError) {
  const auto f = ExpPolyC::monomial(cd(0.0), 1.0);
  EXPECT_THROW(f.tail(), DivergenceError);
  EXPECT_THROW(f.integral_zero_inf(), DivergenceError);
}

TEST(Duhamel, Resonance) {
  const cd mu(-0.8, 0.1);
  const auto f = ExpPolyC::monomial(mu, 1.0);
  const auto u = f.duhamel(mu, true);
  const auto expect = ExpPolyC::monomial(mu, 1.0, 1);
  EXPECT_LT(max_diff(u, expect, {0.0, 0.5, 3.0}), 1e-15);
}

TEST(Duhamel, NonResonantFromZero) {
  const cd mu(-0.8, 0.0), l(-1.5, 0.2);
  const auto u = ExpPolyC::monomial(l, 1.0).duhamel(mu, true);
  for (double Y : {0.0, 0.5, 3.0}) {
    const cd expect = (std::exp(l * Y) - std::exp(mu * Y)) / (l - mu);
    EXPECT_LT(std::abs(u.eval(Y) - expect), 1e-15);
  }
}

TEST(Duhamel, OdeResidualAndAnchors) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 5; ++trial) {
    const auto f = random_decaying(rng);
    for (bool from_zero : {true, false}) {
      const cd mu = from_zero ? cd(-0.9, 0.0) : cd(1.1, 0.0);
      const auto u = f.duhamel(mu, from_zero);
      const auto res = u.derivative() - u * mu;
      EXPECT_LT(max_diff(res, f, {0.0, 0.3, 1.1, 4.0}), 1e-12);
      if (from_zero) {
        EXPECT_LT(std::abs(u.eval(0.0)), 1e-12 * (1.0 + u.max_abs()));
      } else {
        EXPECT_LT(std::abs(u.eval(300.0)), 1e-12);
      }
    }
  }
  EXPECT_THROW(ExpPolyC::monomial(cd(-0.2), 1.0).duhamel(cd(-0.5), false), DivergenceError);
}

TEST(ZeroInfIntegral, Closed) {
  EXPECT_NEAR(ExpPolyC::monomial(cd(-2.0), 1.0).integral_zero_inf().real(), 0.5, 1e-15);
  EXPECT_NEAR(ExpPolyC::monomial(cd(-1.0), 1.0, 1).integral_zero_inf().real(), 1.0, 1e-15);
  std::mt19937_64 rng(6);
  boost::math::quadrature::exp_sinh<double> integrator;
  for (int trial = 0; trial < 5; ++trial) {
    const auto f = random_decaying(rng);
    const cd q(integrator.integrate([&](double s) { return f.eval(s).real(); }),
               integrator.integrate([&](double s) { return f.eval(s).imag(); }));
    EXPECT_LT(std::abs(f.integral_zero_inf() - q), 1e-10);
    EXPECT_EQ(f.value_at_zero(), f.eval(0.0));
  }
}

TEST(ExpPolyArray, CoefficientArraysBehaveLikeScalars) {
  SlowArray a(3), b(3);
  a << 1.0, cd(0, 2), -1.0;
  b << 0.5, 1.0, cd(1, 1);
  const auto fa = ExpPolyA::monomial(cd(-1.0), a, 1);
  const auto fb = ExpPolyA::monomial(cd(-0.5), b);
  const auto p = fa * fb;
  const SlowArray v = p.eval(0.7);
  for (int i = 0; i < 3; ++i) {
    const cd expect = a(i) * 0.7 * std::exp(-0.7) * b(i) * std::exp(-0.35);
    EXPECT_LT(std::abs(v(i) - expect), 1e-15);
  }
  const SlowArray I = p.integral_zero_inf();
  EXPECT_LT(std::abs(I(0) - a(0) * b(0) / (1.5 * 1.5)), 1e-15);
}

}  // namespace
