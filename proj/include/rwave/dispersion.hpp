#pragma once

/// @file dispersion.hpp
/// @brief Material constants, Rayleigh speed and the frequency-domain linear
/// algebra of the traction problem at the Rayleigh frequency beta = (-c, 1).
///
/// Units: time is scaled so that the shear speed is 1 (mu = 1); all algebra
/// depends on the single ratio r = (lambda + 2 mu) / mu > 1.

#include <array>
#include <cmath>
#include <complex>
#include <string>

#include <Eigen/Dense>

#include "rwave/errors.hpp"

namespace rwave {

using cd = std::complex<double>;
using Vec2c = Eigen::Vector2cd;
using Vec4c = Eigen::Matrix<cd, 4, 1>;
using Row4c = Eigen::Matrix<cd, 1, 4>;
using Mat2c = Eigen::Matrix2cd;
using Mat4c = Eigen::Matrix4cd;
using Mat24c = Eigen::Matrix<cd, 2, 4>;

inline constexpr cd I_UNIT{0.0, 1.0};

/// Isotropic medium. Only r enters the dynamics; (lambda, mu) are kept for
/// reporting.
struct ElasticMedium {
  double lame_lambda = 1.0;
  double lame_mu = 1.0;
  double r = 3.0;

  static ElasticMedium from_lame(double lambda, double mu) {
    if (!(mu > 0.0) || !(lambda + mu > 0.0)) {
      throw DomainError("ElasticMedium: require mu > 0 and lambda + mu > 0");
    }
    ElasticMedium m;
    m.lame_lambda = lambda;
    m.lame_mu = mu;
    m.r = (lambda + 2.0 * mu) / mu;
    return m;
  }

  /// Medium with mu = 1 and lambda = r - 2.
  static ElasticMedium from_ratio(double r) {
    if (!(r > 1.0)) throw DomainError("ElasticMedium: require r > 1");
    return from_lame(r - 2.0, 1.0);
  }
};

/// Elliptic-region roots omega_1, omega_2 (purely imaginary, Im > 0) with
/// omega_1^2 = c^2 - 1 and omega_2^2 = c^2/r - 1.
inline std::pair<cd, cd> slowness_roots(double c, double r) {
  if (!(r > 1.0)) throw DomainError("slowness_roots: require r > 1");
  if (!(c >= 0.0) || !(c < 1.0)) {
    throw DomainError("slowness_roots: c must lie in [0, 1) (elliptic region)");
  }
  return {cd(0.0, std::sqrt(1.0 - c * c)), cd(0.0, std::sqrt(1.0 - c * c / r))};
}

/// Rayleigh function f(c) = (2 - c^2)^2 - 4 sqrt(1-c^2) sqrt(1-c^2/r).
inline double rayleigh_function(double c, double r) {
  const double a = 2.0 - c * c;
  return a * a - 4.0 * std::sqrt(1.0 - c * c) * std::sqrt(1.0 - c * c / r);
}

/// Rayleigh speed: root of 2 - c^2 = 2 q(c) in (0, 1). Bisection on the
/// certified sign change of the Rayleigh function, then Newton polishing.
inline double rayleigh_speed(double r, double tol = 1e-12) {
  if (!(r > 1.0)) throw DomainError("rayleigh_speed: require r > 1");
  if (!(tol > 0.0)) throw DomainError("rayleigh_speed: require tol > 0");
  // f(c) ~ -2(1 - 1/r) c^2 < 0 near 0 and f(1) = 1 > 0. Start slightly away
  // from c = 0 where f vanishes to second order.
  double lo = 1e-3, hi = 1.0;
  double flo = rayleigh_function(lo, r), fhi = rayleigh_function(hi, r);
  if (!(flo < 0.0 && fhi > 0.0)) {
    throw NoBracketError("rayleigh_speed: no sign change of the Rayleigh function");
  }
  while (hi - lo > 1e-10) {
    const double mid = 0.5 * (lo + hi);
    const double fm = rayleigh_function(mid, r);
    (fm < 0.0 ? lo : hi) = mid;
  }
  // Newton on g(c) = 2 - c^2 - 2 q(c), q = (1-c^2)^{1/4} (1-c^2/r)^{1/4}.
  auto g = [r](double c) {
    return 2.0 - c * c - 2.0 * std::pow((1.0 - c * c) * (1.0 - c * c / r), 0.25);
  };
  double c = 0.5 * (lo + hi);
  for (int it = 0; it < 20; ++it) {
    const double h = 1e-7;
    const double gp = (g(c + h) - g(c - h)) / (2.0 * h);
    const double step = g(c) / gp;
    const double cn = c - step;
    if (!(cn > lo - 1e-9 && cn < hi + 1e-9)) break;  // keep inside the bracket
    c = cn;
    if (std::abs(step) < 1e-16) break;
  }
  if (std::abs(g(c)) > tol) {
    throw NoBracketError("rayleigh_speed: root not resolved to tolerance");
  }
  return c;
}

/// Lopatinski matrix B_Lop(c) = [[2 - c^2, 2 w2], [2 w1, c^2 - 2]].
inline Mat2c lopatinski_matrix(double c, double r) {
  if (!(c > 0.0) || !(c < 1.0)) throw DomainError("lopatinski_matrix: require 0 < c < 1");
  auto [w1, w2] = slowness_roots(c, r);
  Mat2c B;
  B << 2.0 - c * c, 2.0 * w2, 2.0 * w1, c * c - 2.0;
  return B;
}

/// Everything the profile construction needs at beta = (-c, 1).
struct RayleighData {
  double r = 3.0;
  double c = 0.0;
  cd omega1, omega2;
  double q = 0.0;
  Vec2c r1, r2;
  Vec2c ker_vec;    // (omega2, -q): spans ker B_Lop
  Vec2c coker_vec;  // (q, omega2): row vector annihilating Im B_Lop
  Mat2c B_lop;
  double root_tol = 1e-12;

  static RayleighData make(double r, double tol = 1e-12) {
    RayleighData d;
    d.r = r;
    d.root_tol = tol;
    d.c = rayleigh_speed(r, tol);
    std::tie(d.omega1, d.omega2) = slowness_roots(d.c, r);
    d.q = std::sqrt(std::sqrt(1.0 - d.c * d.c) * std::sqrt(1.0 - d.c * d.c / r));
    d.r1 << -d.omega1, 1.0;
    d.r2 << 1.0, d.omega2;
    d.ker_vec << d.omega2, -d.q;
    d.coker_vec << d.q, d.omega2;
    d.B_lop = lopatinski_matrix(d.c, r);
    return d;
  }

  /// omega_j, j = 1..4, with omega_3 = conj(omega_1), omega_4 = conj(omega_2).
  cd omega(int j) const {
    switch (j) {
      case 1: return omega1;
      case 2: return omega2;
      case 3: return std::conj(omega1);
      case 4: return std::conj(omega2);
      default: throw DomainError("omega: index must be 1..4");
    }
  }

  /// Decay rate a_j = |omega_j| (omega_j = i a_j for j = 1, 2).
  double decay(int j) const { return std::abs(omega(j)); }

  /// Exponent of e^{i n omega_j Y}.
  cd exponent(int n, int j) const { return I_UNIT * double(n) * omega(j); }

  /// First-order system matrix G(beta, n) of the mode-n profile ODE.
  Mat4c G(int n) const {
    const double nn = double(n);
    Mat4c Gm = Mat4c::Zero();
    Gm(0, 2) = 1.0;
    Gm(1, 3) = 1.0;
    Gm(2, 0) = nn * nn * (r - c * c);
    Gm(3, 1) = nn * nn * (1.0 - c * c) / r;
    Gm(2, 3) = I_UNIT * nn * (1.0 - r);
    Gm(3, 2) = I_UNIT * nn * (1.0 / r - 1.0);
    return Gm;
  }

  /// Boundary trace matrix C(beta, n) = [[0, in, 1, 0], [(r-2) in, 0, 0, r]].
  Mat24c C(int n) const {
    if (n == 0) throw DomainError("boundary_trace_matrix: n must be nonzero");
    Mat24c Cm = Mat24c::Zero();
    const cd in = I_UNIT * double(n);
    Cm(0, 1) = in;
    Cm(0, 2) = 1.0;
    Cm(1, 0) = (r - 2.0) * in;
    Cm(1, 3) = r;
    return Cm;
  }

  /// Right eigenvectors R_j(n); R3, R4 obtained by conjugation (never
  /// recomputed) so the symmetries hold bitwise.
  Vec4c R(int j, int n) const {
    if (n == 0) throw DomainError("mode_basis: n must be nonzero");
    if (j == 3) return R(1, -n).conjugate();
    if (j == 4) return R(2, -n).conjugate();
    const cd in = I_UNIT * double(n);
    Vec4c v;
    if (j == 1) {
      v << -omega1, 1.0, -in * omega1 * omega1, in * omega1;
    } else if (j == 2) {
      v << 1.0, omega2, in * omega2, in * omega2 * omega2;
    } else {
      throw DomainError("mode_basis: index must be 1..4");
    }
    return v;
  }

  /// Dual (left) basis rows L_j(n), the rows of [R_1..R_4]^{-1}.
  std::array<Row4c, 4> L(int n) const {
    Mat4c Rm;
    for (int j = 0; j < 4; ++j) Rm.col(j) = R(j + 1, n);
    const Mat4c inv = Rm.inverse();
    std::array<Row4c, 4> out;
    for (int j = 0; j < 4; ++j) out[j] = inv.row(j);
    return out;
  }

  /// Vector profile r-hat(n, Y) = w2 e^{in w1 Y} r1 - q e^{in w2 Y} r2 at Y.
  Vec2c rhat(int n, double Y) const {
    if (n < 0) return rhat(-n, Y).conjugate();
    return omega2 * std::exp(exponent(n, 1) * Y) * r1 - q * std::exp(exponent(n, 2) * Y) * r2;
  }
};

/// Restricted inverse of B_Lop: K-perp -> Im. Solves the bordered system
/// [B; ker^H] sigma = [rhs; 0] in the least-squares sense and verifies that
/// rhs lies in the image (cokernel pairing below tol relative to |rhs|).
inline Vec2c lopatinski_restricted_inverse(const RayleighData& d, const Vec2c& rhs,
                                           double tol = 1e-10) {
  const double scale = std::max(rhs.norm(), 1e-300);
  const double pairing = std::abs(d.coker_vec.dot(rhs.conjugate()));
  if (rhs.norm() > 0.0 && pairing > tol * scale * d.coker_vec.norm()) {
    throw SolvabilityError("restricted inverse: rhs not in Im B_Lop (cokernel pairing " +
                               std::to_string(pairing / scale) + ")",
                           pairing / scale);
  }
  Eigen::Matrix<cd, 3, 2> A;
  A.topRows<2>() = d.B_lop;
  A.row(2) = d.ker_vec.adjoint();
  Eigen::Matrix<cd, 3, 1> b;
  b << rhs(0), rhs(1), 0.0;
  return A.colPivHouseholderQr().solve(b);
}

/// 2x2 matrix M with sigma = M rhs equal to the restricted inverse for
/// every rhs in the image; used to apply the inverse to whole slow arrays.
inline Mat2c lopatinski_restricted_inverse_matrix(const RayleighData& d) {
  Eigen::Matrix<cd, 3, 2> A;
  A.topRows<2>() = d.B_lop;
  A.row(2) = d.ker_vec.adjoint();
  const Eigen::Matrix<cd, 2, 3> pinv =
      (A.adjoint() * A).inverse() * A.adjoint();
  return pinv.leftCols<2>();
}

}  // namespace rwave
