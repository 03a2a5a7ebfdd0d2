#include <gtest/gtest.h>

#include <boost/multiprecision/cpp_bin_float.hpp>

#include "rwave/dispersion.hpp"

namespace {

using namespace rwave;
using mp = boost::multiprecision::cpp_bin_float_50;

// Bisection on the Rayleigh function in 50-digit arithmetic.
mp mp_rayleigh_root(double r_in) {
  const mp r = r_in;
  auto f = [&](const mp& c) {
    const mp a = 2 - c * c;
    return a * a - 4 * sqrt(1 - c * c) * sqrt(1 - c * c / r);
  };
  mp lo = mp("0.001"), hi = 1;
  for (int i = 0; i < 160; ++i) {
    const mp mid = (lo + hi) / 2;
    (f(mid) < 0 ? lo : hi) = mid;
  }
  return (lo + hi) / 2;
}

TEST(SlownessRoots, ZeroSpeedGivesUnitRoots) {
  auto [w1, w2] = slowness_roots(0.0, 3.0);
  EXPECT_EQ(w1, cd(0.0, 1.0));
  EXPECT_EQ(w2, cd(0.0, 1.0));
}

TEST(SlownessRoots, DirectSubstitution) {
  auto [w1, w2] = slowness_roots(0.5, 4.0);
  EXPECT_NEAR(w1.imag(), std::sqrt(0.75), 1e-15);
  EXPECT_NEAR(w2.imag(), std::sqrt(0.9375), 1e-15);
  EXPECT_EQ(w1.real(), 0.0);
  EXPECT_EQ(w2.real(), 0.0);
}

TEST(SlownessRoots, DomainErrors) {
  EXPECT_THROW(slowness_roots(1.0, 3.0), DomainError);
  EXPECT_THROW(slowness_roots(-0.1, 3.0), DomainError);
  EXPECT_THROW(slowness_roots(0.5, 1.0), DomainError);
}

TEST(SlownessRoots, HighPrecisionCrossCheckAtRayleighSpeed) {
  const double c = rayleigh_speed(3.0);
  auto [w1, w2] = slowness_roots(c, 3.0);
  const mp cm = c;
  const mp ref = sqrt(1 - cm * cm);
  EXPECT_NEAR(w1.imag(), static_cast<double>(ref), 1e-15);
  EXPECT_NEAR(w1.imag() * w1.imag(), 1.0 - c * c, 1e-14);
}

TEST(RayleighSpeed, PoissonQuarterValue) {
  const double c = rayleigh_speed(3.0);
  EXPECT_NEAR(c, 0.919402, 5e-7);
  EXPECT_NEAR(c, static_cast<double>(mp_rayleigh_root(3.0)), 1e-12);
  EXPECT_LT(std::abs(lopatinski_matrix(c, 3.0).determinant()), 1e-10);
}

TEST(RayleighSpeed, InvalidRatio) {
  EXPECT_THROW(rayleigh_speed(1.0), DomainError);
  EXPECT_THROW(rayleigh_speed(0.5), DomainError);
}

class RatioSuite : public ::testing::TestWithParam<double> {};

TEST_P(RatioSuite, RootKernelCokernel) {
  const double r = GetParam();
  const auto d = RayleighData::make(r);
  EXPECT_GT(d.c, 0.0);
  EXPECT_LT(d.c, 1.0);
  EXPECT_LT(std::abs(2.0 - d.c * d.c - 2.0 * d.q), 1e-12);
  EXPECT_LT(std::abs(d.B_lop.determinant()), 1e-10);
  EXPECT_LT((d.B_lop * d.ker_vec).norm(), 1e-12);
  EXPECT_LT((d.coker_vec.transpose() * d.B_lop).norm(), 1e-12);
  EXPECT_NEAR(d.q * d.q, (-d.omega1 * d.omega2).real(), 1e-14);
  EXPECT_NEAR((d.omega1 * d.omega1).real(), d.c * d.c - 1.0, 1e-14);
  EXPECT_NEAR((d.omega2 * d.omega2).real(), d.c * d.c / r - 1.0, 1e-14);
  EXPECT_NEAR(d.c, static_cast<double>(mp_rayleigh_root(r)), 1e-11);
}

INSTANTIATE_TEST_SUITE_P(Ratios, RatioSuite, ::testing::Values(1.5, 2.0, 3.0, 5.0, 10.0));

TEST(Lopatinski, NonRayleighSpeedIsRegular) {
  EXPECT_GT(std::abs(lopatinski_matrix(0.5, 3.0).determinant()), 0.1);
}

TEST(Lopatinski, OffDiagonalPurelyImaginary) {
  const auto B = lopatinski_matrix(0.7, 3.0);
  EXPECT_EQ(B(0, 1).real(), 0.0);
  EXPECT_EQ(B(1, 0).real(), 0.0);
  EXPECT_EQ(B(0, 0).imag(), 0.0);
}

TEST(RestrictedInverse, ZeroRhs) {
  const auto d = RayleighData::make(3.0);
  EXPECT_LT(lopatinski_restricted_inverse(d, Vec2c::Zero()).norm(), 1e-300);
}

TEST(RestrictedInverse, RecoversProjectionOfPreimage) {
  const auto d = RayleighData::make(3.0);
  Vec2c w(cd(0.3, -1.2), cd(2.0, 0.7));
  const Vec2c rhs = d.B_lop * w;
  const Vec2c sigma = lopatinski_restricted_inverse(d, rhs);
  const Vec2c k = d.ker_vec / d.ker_vec.norm();
  const Vec2c proj = w - k * (k.adjoint() * w)(0);
  EXPECT_LT((sigma - proj).norm(), 1e-12);
  EXPECT_LT((d.B_lop * sigma - rhs).norm(), 1e-12);
  EXPECT_LT(std::abs((d.ker_vec.adjoint() * sigma)(0)), 1e-12);
  const Vec2c sigma2 = lopatinski_restricted_inverse_matrix(d) * rhs;
  EXPECT_LT((sigma2 - proj).norm(), 1e-12);
}

// B_Lop is nilpotent at the Rayleigh speed (trace 0, det 0), so its image
// coincides with its kernel: the kernel vector itself IS solvable, while the
// conjugated cokernel direction is not.
TEST(RestrictedInverse, KernelVectorLiesInImage) {
  const auto d = RayleighData::make(3.0);
  EXPECT_LT((d.B_lop * d.B_lop).norm(), 1e-12);
  EXPECT_NO_THROW(lopatinski_restricted_inverse(d, d.ker_vec * 2.0));
}

TEST(RestrictedInverse, OffImageRhsRaisesSolvabilityError) {
  const auto d = RayleighData::make(3.0);
  const Vec2c bad = d.coker_vec.conjugate();
  EXPECT_THROW(lopatinski_restricted_inverse(d, bad), SolvabilityError);
}

TEST(BoundaryTrace, ActsOnR1AsFirstLopatinskiColumn) {
  const auto d = RayleighData::make(3.0);
  for (int n : {1, 2, -3}) {
    const cd in = I_UNIT * double(n);
    const Vec2c got = d.C(n) * d.R(1, n);
    EXPECT_LT((got - in * d.B_lop.col(0)).norm(), 1e-12);
    const Vec2c got2 = d.C(n) * d.R(2, n);
    EXPECT_LT((got2 - in * d.B_lop.col(1)).norm(), 1e-12);
  }
}

TEST(BoundaryTrace, ConjugationAndDomain) {
  const auto d = RayleighData::make(3.0);
  EXPECT_EQ(d.C(-2), d.C(2).conjugate());
  EXPECT_THROW(d.C(0), DomainError);
}

TEST(BoundaryTrace, KernelModeHasZeroTraction) {
  const auto d = RayleighData::make(3.0);
  const Vec4c U = d.ker_vec(0) * d.R(1, 1) + d.ker_vec(1) * d.R(2, 1);
  EXPECT_LT((d.C(1) * U).norm(), 1e-12);
}

TEST(ModeBasis, EigenResiduals) {
  const auto d = RayleighData::make(3.0);
  for (int n : {1, -1, 5, -5}) {
    const Mat4c G = d.G(n);
    for (int j = 1; j <= 4; ++j) {
      const Vec4c R = d.R(j, n);
      EXPECT_LT((G * R - d.exponent(n, j) * R).norm(), 1e-12) << "n=" << n << " j=" << j;
    }
  }
}

TEST(ModeBasis, Biorthogonality) {
  const auto d = RayleighData::make(3.0);
  for (int n : {1, -1, 5, -5}) {
    const auto L = d.L(n);
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) {
        const cd v = (L[i] * d.R(j + 1, n)).value();
        EXPECT_LT(std::abs(v - (i == j ? 1.0 : 0.0)), 1e-12);
      }
  }
}

TEST(ModeBasis, ClosedFormDualRows) {
  const auto d = RayleighData::make(3.0);
  const double c = d.c, r = d.r;
  for (int n : {1, 3}) {
    const cd in = I_UNIT * double(n);
    Row4c L1, L2;
    L1 << -in * (r - c * c), -in * d.omega1, d.omega1, -r;
    L1 /= (-2.0 * I_UNIT * d.omega1 * c * c * double(n));
    L2 << in * d.omega2 * r, in * (c * c - 1.0), 1.0, r * d.omega2;
    L2 /= (2.0 * I_UNIT * d.omega2 * c * c * double(n));
    EXPECT_LT(std::abs((L1 * d.R(1, n)).value() - 1.0), 1e-12);
    EXPECT_LT(std::abs((L2 * d.R(2, n)).value() - 1.0), 1e-12);
    const auto L = d.L(n);
    EXPECT_LT((L[0] - L1).norm(), 1e-12);
    EXPECT_LT((L[1] - L2).norm(), 1e-12);
  }
}

TEST(ModeBasis, ConjugationSymmetries) {
  const auto d = RayleighData::make(3.0);
  EXPECT_EQ(d.R(3, 2), d.R(1, -2).conjugate());
  EXPECT_EQ(d.R(4, 2), d.R(2, -2).conjugate());
  EXPECT_EQ(d.omega(3), std::conj(d.omega(1)));
  EXPECT_EQ(d.omega(4), std::conj(d.omega(2)));
}

}  // namespace
