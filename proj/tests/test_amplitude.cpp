#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <random>

#include "rwave/amplitude.hpp"

namespace {

using namespace rwave;

constexpr double kPi = std::numbers::pi;

AmplitudeGrid small_grid() {
  AmplitudeGrid g;
  g.Lx = 2.0 * kPi;
  g.nx = 32;
  g.ntheta = 9;
  return g;
}

/// Smooth, band-limited test amplitude with a few theta modes.
Eigen::MatrixXcd smooth_state(const AmplitudeOps& ops, std::mt19937_64& rng, double scale) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const auto& g = ops.grid();
  Eigen::MatrixXcd a = ops.zeros();
  for (int n = 1; n <= 4; ++n) {
    const cd c0(u(rng), u(rng)), c1(u(rng), u(rng));
    for (int j = 0; j < g.nx; ++j) {
      const double x = g.x(j);
      a(j, n) = scale / (n * n) * (c0 * std::exp(std::sin(x)) + c1 * std::cos(2 * x));
    }
  }
  for (int j = 0; j < g.nx; ++j) a(j, 0) = scale * 0.3 * std::cos(g.x(j));
  Eigen::MatrixXcd ah = ops.to_spec(a);
  ops.dealias(ah);
  return ah;
}

TEST(AmplitudeKernel, ReferenceKernelProperties) {
  const Kernel k = Kernel::reference(0.7);
  EXPECT_EQ(k.eval(0, 3, -3), 0.0);
  for (int a = -5; a <= 5; ++a)
    for (int b = -5; b <= 5; ++b)
      for (int c = -5; c <= 5; ++c) {
        const double v = k.eval(a, b, c);
        EXPECT_DOUBLE_EQ(v, k.eval(b, a, c));
        EXPECT_DOUBLE_EQ(v, k.eval(a, c, b));
        EXPECT_DOUBLE_EQ(-v, k.eval(-a, -b, -c));
        if (a && b && c) {
          const double bound = k.bound_C * std::min({std::abs(a * b), std::abs(b * c), std::abs(a * c)});
          EXPECT_LE(std::abs(v), bound + 1e-14);
        }
      }
}

TEST(AmplitudeOps, TransformRoundTripAndHilbert) {
  const AmplitudeOps ops(small_grid());
  std::mt19937_64 rng(1);
  const auto a = smooth_state(ops, rng, 1.0);
  EXPECT_LT((ops.to_spec(ops.to_phys(a)) - a).cwiseAbs().maxCoeff(), 1e-14);
  const auto h = ops.hilbert(ops.hilbert(a));
  // H^2 = -I on modes n != 0.
  EXPECT_LT((h.rightCols(a.cols() - 1) + a.rightCols(a.cols() - 1)).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_EQ(h.col(0).cwiseAbs().maxCoeff(), 0.0);
}

TEST(AmplitudeOps, BilinearMatchesDirectThetaQuadrature) {
  // Oracle: B(a, b)(x, n) computed from the definition with explicit
  // e^{i n theta} sums at a single x point.
  const AmplitudeGrid g = small_grid();
  const AmplitudeOps ops(g);
  std::mt19937_64 rng(2);
  const auto a = smooth_state(ops, rng, 1.0), b = smooth_state(ops, rng, 1.0);
  const Kernel k = Kernel::reference(1.0, 0.8);
  const auto B = ops.to_phys(bilinear_B(ops, a, b, k));
  const auto ap = ops.to_phys(a), bp = ops.to_phys(b);
  const int j = 5;
  for (int n = 0; n <= 4; ++n) {
    cd s = 0.0;
    for (int np = -g.ntheta; np <= g.ntheta; ++np) {
      const int n1 = n - np;
      if (std::abs(n1) > g.ntheta) continue;
      s += k.eval(-n, n1, np) * AmplitudeOps::mode(ap, j, n1) * AmplitudeOps::mode(bp, j, np);
    }
    s *= -1.0 / (4.0 * kPi * k.c0);
    EXPECT_LT(std::abs(B(j, n) - s), 1e-12);
  }
}

TEST(AmplitudeOps, QuadraticFormAgreesPhysicalAndFourier) {
  const AmplitudeGrid g = small_grid();
  const AmplitudeOps ops(g);
  const auto HB = Multiplier::from_kernel(Kernel::reference(), g.ntheta);
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 5; ++trial) {
    const auto u = smooth_state(ops, rng, 1.0), v = smooth_state(ops, rng, 1.0);
    const auto q = quadratic_form(ops, HB, u, v);
    EXPECT_LT(std::abs(q.physical - q.fourier), 1e-10 * (1.0 + std::abs(q.fourier)));
    EXPECT_TRUE(std::isfinite(cancellation_ratio(ops, HB, u, v, 4.0)));
  }
}

TEST(AmplitudeSolver, PureTransportIsExact) {
  // d_t a + c d_x a = 2 t g(x - c t) e^{i theta} + c.c. has solution
  // t^2 g(x - c t); forcing vanishes at t = 0 as required by causality.
  const AmplitudeGrid g = small_grid();
  const double c = 0.9;
  AmplitudeOptions opt;
  opt.dt_max = 0.05;
  AmplitudeSolver s(g, c, Multiplier::zero(g.ntheta), opt);
  auto G = [&](double t, Eigen::MatrixXcd& out) {
    for (int j = 0; j < g.nx; ++j) out(j, 1) = 2.0 * t * std::cos(g.x(j) - c * t);
  };
  const auto hist = s.run(G, {0.5, 1.0});
  const auto a = s.ops().to_phys(hist.back().a_hat);
  for (int j = 0; j < g.nx; ++j) EXPECT_NEAR(a(j, 1).real(), std::cos(g.x(j) - c) * 1.0, 1e-12);
}

Eigen::MatrixXcd nonlinear_run(double dt, double amp) {
  const AmplitudeGrid g = small_grid();
  AmplitudeOptions opt;
  opt.dt_max = dt;
  opt.cfl = 1e9;
  AmplitudeSolver s(g, 0.9, Multiplier::from_kernel(Kernel::reference(), g.ntheta), opt);
  auto G = [&](double t, Eigen::MatrixXcd& out) {
    for (int j = 0; j < g.nx; ++j) {
      out(j, 1) = amp * std::sin(kPi * t) * (1.0 + 0.5 * std::cos(g.x(j)));
      out(j, 2) = cd(0.0, 0.5 * amp) * t * t;
    }
  };
  return s.run(G, {1.0}).back().a_hat;
}

TEST(AmplitudeSolver, IntegratingFactorRK4IsFourthOrder) {
  const auto a1 = nonlinear_run(0.1, 2.0), a2 = nonlinear_run(0.05, 2.0),
             a3 = nonlinear_run(0.025, 2.0);
  const double e1 = (a1 - a2).cwiseAbs().maxCoeff(), e2 = (a2 - a3).cwiseAbs().maxCoeff();
  ASSERT_GT(e2, 0.0);
  EXPECT_GT(std::log2(e1 / e2), 3.6);
}

TEST(AmplitudeSolver, LinearizedSolveMatchesDirectionalDerivative) {
  // Oracle: central difference of the nonlinear solve with respect to a
  // forcing perturbation.
  const AmplitudeGrid g = small_grid();
  AmplitudeOptions opt;
  opt.dt_max = 0.02;
  opt.cfl = 1e9;
  AmplitudeSolver s(g, 0.9, Multiplier::from_kernel(Kernel::reference(), g.ntheta), opt);
  auto G2 = [&](double t, Eigen::MatrixXcd& out) {
    for (int j = 0; j < g.nx; ++j) out(j, 1) = 2.0 * t * (1.0 + 0.5 * std::cos(g.x(j)));
  };
  auto Gk = [&](double t, Eigen::MatrixXcd& out) {
    for (int j = 0; j < g.nx; ++j) {
      out(j, 1) = cd(0.0, t) * std::sin(g.x(j));
      out(j, 2) = t * t;
    }
  };
  const double d = 1e-4;
  auto Gp = [&](double t, Eigen::MatrixXcd& out) {
    Eigen::MatrixXcd k = out;
    G2(t, out);
    Gk(t, k);
    out += d * k;
  };
  auto Gm = [&](double t, Eigen::MatrixXcd& out) {
    Eigen::MatrixXcd k = out;
    G2(t, out);
    Gk(t, k);
    out -= d * k;
  };
  std::vector<double> rec;
  for (int i = 1; i <= 20; ++i) rec.push_back(0.05 * i);
  const auto a2 = s.run(G2, rec);
  const auto ak = s.solve_linearized(a2, Gk, rec, 0.02);
  const Eigen::MatrixXcd fd = (s.run(Gp, {1.0}).back().a_hat - s.run(Gm, {1.0}).back().a_hat) / (2 * d);
  const double scale = fd.cwiseAbs().maxCoeff();
  ASSERT_GT(scale, 0.0);
  EXPECT_LT((ak.back().a_hat - fd).cwiseAbs().maxCoeff() / scale, 1e-5);
}

TEST(AmplitudeSolver, BlowUpGuardRaises) {
  const AmplitudeGrid g = small_grid();
  AmplitudeOptions opt;
  opt.blowup_ceiling = 1e-3;
  AmplitudeSolver s(g, 0.9, Multiplier::zero(g.ntheta), opt);
  auto G = [&](double, Eigen::MatrixXcd& out) { out(0, 1) = 1.0; };
  EXPECT_THROW(s.run(G, {1.0}), InstabilityError);
}

TEST(AmplitudeSolver, SeamGuardRaises) {
  const AmplitudeGrid g = small_grid();
  AmplitudeOptions opt;
  opt.seam_guard = true;
  AmplitudeSolver s(g, 0.9, Multiplier::zero(g.ntheta), opt);
  auto G = [&](double, Eigen::MatrixXcd& out) {
    for (int j = 0; j < g.nx; ++j) out(j, 1) = 1.0;
  };
  EXPECT_THROW(s.run(G, {0.1}), InstabilityError);
}

TEST(AmplitudeSolver, TameMonitorFiniteOnSmoothRun) {
  const AmplitudeGrid g = small_grid();
  AmplitudeSolver s(g, 0.9, Multiplier::from_kernel(Kernel::reference(), g.ntheta));
  auto G = [&](double t, Eigen::MatrixXcd& out) {
    for (int j = 0; j < g.nx; ++j) out(j, 1) = t * std::exp(std::cos(g.x(j)));
  };
  std::vector<double> rec;
  for (int i = 1; i <= 10; ++i) rec.push_back(0.1 * i);
  const auto h = s.run(G, rec);
  const auto ratios = tame_monitor(s.ops(), h, 2.0, 4.0);
  ASSERT_EQ(ratios.size(), rec.size() - 2);
  for (double r : ratios) EXPECT_TRUE(std::isfinite(r));
}

TEST(AmplitudeSnapshot, RoundTrip) {
  const AmplitudeGrid g = small_grid();
  const AmplitudeOps ops(g);
  std::mt19937_64 rng(7);
  SpectralState st{smooth_state(ops, rng, 1.0), 0.75};
  const std::string path = ::testing::TempDir() + "rwave_amp_snapshot.bin";
  save_amplitude_snapshot(path, g, st);
  const auto [g2, s2] = load_amplitude_snapshot(path);
  EXPECT_EQ(g2.nx, g.nx);
  EXPECT_EQ(s2.t, 0.75);
  EXPECT_EQ((s2.a_hat - st.a_hat).cwiseAbs().maxCoeff(), 0.0);
  std::remove(path.c_str());
}

}  // namespace
