#pragma once

/// @file flux.hpp
/// @brief Saint Venant-Kirchhoff first Piola stress P = (I + A) S(E) as a
/// cubic polynomial in the displacement gradient A, split into exact
/// homogeneous linear/quadratic/cubic parts.
///
/// Gradient variables are ordered g = (du/dx, du/dy, dv/dx, dv/dy), i.e.
/// g[2*i + j] = A(i, j) = d_j U_i. Flux entries are ordered the same way:
/// P[2*i + j] = P(i, j); column j is the flux in direction j, so the momentum
/// equation reads d_t^2 U_i = sum_j d_j P(i, j) and the traction on y = 0 is
/// column 1.

#include <array>
#include <cmath>
#include <functional>

#include <Eigen/Dense>

#include "rwave/dispersion.hpp"

namespace rwave {

using Grad = std::array<double, 4>;
using Flux = std::array<double, 4>;

struct FluxDecomposition {
  double lambda = 1.0;  ///< Lame lambda (mu = 1 units: lambda = r - 2)
  double mu = 1.0;
  /// L[e][a]: P_e = sum_a L[e][a] g_a
  std::array<std::array<double, 4>, 4> L{};
  /// Q[e][a][b], symmetric in (a, b): P_e = sum_ab Q[e][a][b] g_a g_b
  std::array<std::array<std::array<double, 4>, 4>, 4> Q{};
  /// C[e][a][b][c], fully symmetric in (a, b, c)
  std::array<std::array<std::array<std::array<double, 4>, 4>, 4>, 4> C{};

  using M2 = Eigen::Matrix2d;

  static M2 to_mat(const Grad& g) {
    M2 A;
    A << g[0], g[1], g[2], g[3];
    return A;
  }
  static Flux to_flux(const M2& P) { return {P(0, 0), P(0, 1), P(1, 0), P(1, 1)}; }

  M2 S1(const M2& A) const {
    return lambda * A.trace() * M2::Identity() + mu * (A + A.transpose());
  }
  M2 S2(const M2& A) const {
    const M2 AtA = A.transpose() * A;
    return 0.5 * lambda * AtA.trace() * M2::Identity() + mu * AtA;
  }

  /// Full flux P(A) = (I + A) S(E), E = (A + A^T + A^T A) / 2.
  Flux full(const Grad& g) const {
    const M2 A = to_mat(g);
    const M2 E = 0.5 * (A + A.transpose() + A.transpose() * A);
    const M2 S = lambda * E.trace() * M2::Identity() + 2.0 * mu * E;
    return to_flux((M2::Identity() + A) * S);
  }
  Flux linear(const Grad& g) const { return to_flux(S1(to_mat(g))); }
  Flux quadratic(const Grad& g) const {
    const M2 A = to_mat(g);
    return to_flux(S2(A) + A * S1(A));
  }
  Flux cubic(const Grad& g) const {
    const M2 A = to_mat(g);
    return to_flux(A * S2(A));
  }
};

/// Exact homogeneous split by polarization of the closed-form parts (the
/// coefficients are small rational combinations of lambda, mu, so the
/// polarization identities are exact in floating point).
inline FluxDecomposition decompose_flux(const ElasticMedium& m) {
  FluxDecomposition f;
  f.lambda = m.lame_lambda / m.lame_mu;
  f.mu = 1.0;
  auto basis = [](int a) {
    Grad g{0, 0, 0, 0};
    g[a] = 1.0;
    return g;
  };
  auto add = [](Grad a, const Grad& b) {
    for (int i = 0; i < 4; ++i) a[i] += b[i];
    return a;
  };
  for (int a = 0; a < 4; ++a) {
    const Flux l = f.linear(basis(a));
    for (int e = 0; e < 4; ++e) f.L[e][a] = l[e];
  }
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) {
      const Flux qab = f.quadratic(add(basis(a), basis(b)));
      const Flux qa = f.quadratic(basis(a)), qb = f.quadratic(basis(b));
      for (int e = 0; e < 4; ++e) {
        const double v = (a == b) ? qa[e] : 0.5 * (qab[e] - qa[e] - qb[e]);
        f.Q[e][a][b] = v;
      }
    }
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b)
      for (int c = 0; c < 4; ++c) {
        const Grad ea = basis(a), eb = basis(b), ec = basis(c);
        const Flux abc = f.cubic(add(add(ea, eb), ec));
        const Flux ab = f.cubic(add(ea, eb)), ac = f.cubic(add(ea, ec)), bc = f.cubic(add(eb, ec));
        const Flux pa = f.cubic(ea), pb = f.cubic(eb), pc = f.cubic(ec);
        for (int e = 0; e < 4; ++e) {
          f.C[e][a][b][c] = (abc[e] - ab[e] - ac[e] - bc[e] + pa[e] + pb[e] + pc[e]) / 6.0;
        }
      }
  return f;
}

/// Evaluate L + Q + C from the coefficient tensors (used to verify the split).
inline Flux eval_decomposed(const FluxDecomposition& f, const Grad& g) {
  Flux out{0, 0, 0, 0};
  for (int e = 0; e < 4; ++e) {
    double s = 0.0;
    for (int a = 0; a < 4; ++a) {
      s += f.L[e][a] * g[a];
      for (int b = 0; b < 4; ++b) {
        s += f.Q[e][a][b] * g[a] * g[b];
        for (int c = 0; c < 4; ++c) s += f.C[e][a][b][c] * g[a] * g[b] * g[c];
      }
    }
    out[e] = s;
  }
  return out;
}

/// Symmetric bilinear Q(g, h) on any field type F supporting +, scalar *,
/// and the supplied product mul(F, F). zero() must return the additive zero.
template <class F, class Mul, class Zero>
std::array<F, 4> apply_Q(const FluxDecomposition& f, const std::array<F, 4>& g,
                         const std::array<F, 4>& h, Mul&& mul, Zero&& zero) {
  std::array<F, 4> out{zero(), zero(), zero(), zero()};
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) {
      bool any = false;
      for (int e = 0; e < 4; ++e) any = any || f.Q[e][a][b] != 0.0;
      if (!any) continue;
      const F p = mul(g[a], h[b]);
      for (int e = 0; e < 4; ++e)
        if (f.Q[e][a][b] != 0.0) out[e] += p * f.Q[e][a][b];
    }
  return out;
}

/// Symmetric trilinear C(g, h, k) on field type F.
template <class F, class Mul, class Zero>
std::array<F, 4> apply_C(const FluxDecomposition& f, const std::array<F, 4>& g,
                         const std::array<F, 4>& h, const std::array<F, 4>& k, Mul&& mul,
                         Zero&& zero) {
  std::array<F, 4> out{zero(), zero(), zero(), zero()};
  // W[e][c] = sum_ab C[e][a][b][c] g_a h_b, then out_e = sum_c W[e][c] k_c.
  std::array<std::array<F, 4>, 4> W;
  std::array<std::array<bool, 4>, 4> used{};
  for (int e = 0; e < 4; ++e)
    for (int c = 0; c < 4; ++c) W[e][c] = zero();
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) {
      bool any = false;
      for (int e = 0; e < 4; ++e)
        for (int c = 0; c < 4; ++c) any = any || f.C[e][a][b][c] != 0.0;
      if (!any) continue;
      const F p = mul(g[a], h[b]);
      for (int e = 0; e < 4; ++e)
        for (int c = 0; c < 4; ++c)
          if (f.C[e][a][b][c] != 0.0) {
            W[e][c] += p * f.C[e][a][b][c];
            used[e][c] = true;
          }
    }
  for (int e = 0; e < 4; ++e)
    for (int c = 0; c < 4; ++c)
      if (used[e][c]) out[e] += mul(W[e][c], k[c]);
  return out;
}

}  // namespace rwave
