#pragma once

// Finite-difference validation cases shared by the unit tests and the
// acceptance binary: a manufactured solution, the phase error of a linear
// Rayleigh wave, and self-convergence on a forced oscillatory wavetrain.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "rwave/dispersion.hpp"
#include "rwave/svk_fd.hpp"

namespace rwave::fd_cases {

inline constexpr double kPi = std::numbers::pi;

/// Manufactured solution U* = tau(t) (sin x w0(y), cos x w1(y)), tau = t^4.
struct Manufactured {
  double A = 0.05;
  FluxDecomposition f = decompose_flux(ElasticMedium::from_ratio(3.0));

  static double tau(double t) { return t > 0 ? t * t * t * t : 0.0; }
  static double tau2(double t) { return t > 0 ? 12 * t * t : 0.0; }
  // w0 = (1 + y) e^{-y^2}, w1 = (0.5 + y^2) e^{-y^2}; derivatives by hand.
  static void w0(double y, double& w, double& w1d, double& w2d) {
    const double e = std::exp(-y * y);
    w = (1 + y) * e;
    w1d = (1 - 2 * y * (1 + y)) * e;
    w2d = (-2 - 4 * y - 2 * y * (1 - 2 * y * (1 + y))) * e;
  }
  static void w1(double y, double& w, double& w1d, double& w2d) {
    const double e = std::exp(-y * y);
    w = (0.5 + y * y) * e;
    w1d = (2 * y - 2 * y * (0.5 + y * y)) * e;
    w2d = (2 - 2 * (0.5 + y * y) - 4 * y * y - 2 * y * (2 * y - 2 * y * (0.5 + y * y))) * e;
  }
  void value(double t, double x, double y, double& u, double& v) const {
    double a, b, c;
    w0(y, a, b, c);
    u = A * tau(t) * std::sin(x) * a;
    w1(y, a, b, c);
    v = A * tau(t) * std::cos(x) * a;
  }
  /// grad U (g), and d/dx g, d/dy g.
  void grads(double t, double x, double y, Grad& g, Grad& gx, Grad& gy) const {
    double p, p1, p2, q, q1, q2;
    w0(y, p, p1, p2);
    w1(y, q, q1, q2);
    const double s = A * tau(t), sx = std::sin(x), cx = std::cos(x);
    g = {s * cx * p, s * sx * p1, -s * sx * q, s * cx * q1};
    gx = {-s * sx * p, s * cx * p1, -s * cx * q, -s * sx * q1};
    gy = {s * cx * p1, s * sx * p2, -s * sx * q1, s * cx * q2};
  }
  /// Jacobian dP_e / dg_a at g.
  void jac(const Grad& g, double J[4][4]) const {
    for (int e = 0; e < 4; ++e)
      for (int a = 0; a < 4; ++a) {
        double v = f.L[e][a];
        for (int b = 0; b < 4; ++b) {
          v += 2 * f.Q[e][a][b] * g[b];
          for (int c = 0; c < 4; ++c) v += 3 * f.C[e][a][b][c] * g[b] * g[c];
        }
        J[e][a] = v;
      }
  }
  /// S = d_t^2 U* - div P(grad U*).
  void source(double t, double x, double y, double& sx, double& sy) const {
    Grad g, gx, gy;
    grads(t, x, y, g, gx, gy);
    double J[4][4];
    jac(g, J);
    double div[2] = {0, 0};
    for (int i = 0; i < 2; ++i)
      for (int a = 0; a < 4; ++a) div[i] += J[2 * i][a] * gx[a] + J[2 * i + 1][a] * gy[a];
    double p, p1, p2, q, q1, q2;
    w0(y, p, p1, p2);
    w1(y, q, q1, q2);
    sx = A * tau2(t) * std::sin(x) * p - div[0];
    sy = A * tau2(t) * std::cos(x) * q - div[1];
  }
};

inline double manufactured_error(int m) {
  const Manufactured M;
  FdGrid g{16 * m, 24 * m + 1, 2 * kPi, 6.0 / (24 * m)};
  FdConfig cfg;
  cfg.cfl = 0.4;
  cfg.source = [&](double t, FdField& s) {
    for (int j = 0; j <= g.ny - 2; ++j)
      for (int i = 0; i < g.nx; ++i) M.source(t, g.x(i), g.y(j), s.U(0, j, i), s.U(1, j, i));
  };
  cfg.traction = [&](double t, std::vector<double>& tx, std::vector<double>& ty) {
    for (int i = 0; i < g.nx; ++i) {
      Grad gr, gx, gy;
      M.grads(t, g.x(i), 0.0, gr, gx, gy);
      const Flux P = M.f.full(gr);
      tx[i] = -P[1];
      ty[i] = -P[3];
    }
  };
  FdSolver s(g, ElasticMedium::from_ratio(3.0), cfg);
  s.advance_to(1.0);
  double err = 0.0;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      double u, v;
      M.value(1.0, g.x(i), g.y(j), u, v);
      err = std::max({err, std::abs(s.state().U(0, j, i) - u), std::abs(s.state().U(1, j, i) - v)});
    }
  return err;
}

/// Phase error of a Rayleigh surface wave after one period.
inline double rayleigh_phase_error(int ppw) {
  const RayleighData d = RayleighData::make(3.0);
  const int n = 4;
  const int nx = n * ppw;
  const double h = 2 * kPi / nx;
  FdGrid g{nx, int(3.0 / h) + 1, 2 * kPi, h};
  FdConfig cfg;
  cfg.mode = FdMode::linearized;
  cfg.cfl = 0.4;
  FdSolver s(g, ElasticMedium::from_ratio(3.0), cfg);
  auto exact = [&](double t, FdField& f) {
    for (int j = 0; j < g.ny; ++j) {
      const Vec2c r = d.rhat(n, g.y(j));
      for (int i = 0; i < g.nx; ++i) {
        const cd ph = std::exp(cd(0, n * (g.x(i) - d.c * t)));
        f.U(0, j, i) = (r(0) * ph).real();
        f.U(1, j, i) = (r(1) * ph).real();
      }
    }
  };
  const double period = 2 * kPi / (n * d.c);
  const auto [nsteps, dt] = FdSolver::steps_for(period, s.dt());
  s.set_dt(dt);
  FdField prev(g), cur(g);
  exact(-dt, prev);
  exact(0.0, cur);
  s.set_state(prev, cur, 0.0);
  for (int k = 0; k < nsteps; ++k) s.step();
  // Project the surface displacement u(x, 0) onto e^{i n x}.
  cd proj = 0.0, ref = 0.0;
  FdField ex(g);
  exact(period, ex);
  for (int i = 0; i < g.nx; ++i) {
    const cd e = std::exp(cd(0, -n * g.x(i)));
    proj += s.state().U(0, 0, i) * e;
    ref += ex.U(0, 0, i) * e;
  }
  return std::abs(std::arg(proj / ref)) / (2 * kPi);
}

/// Nonlinear solve driven by the traction eps^2 e^{-1/t} e^{cos x - 1}
/// cos((x - c t) / eps) e_y at ppw points per fast wavelength (dt ~ h).
/// Returns the surface and near-surface values on the coarsest (ppw0) grid.
inline std::vector<double> oscillatory_run(double eps, int ppw0, int level, double T = 1.0) {
  const double r = 3.0, c = rayleigh_speed(r);
  const int f = 1 << level;
  FdGrid g;
  g.nx = int(std::ceil(ppw0 / eps)) * f;
  g.hy = g.hx();
  const int ny0 = int(std::ceil(2.0 / (2 * kPi / int(std::ceil(ppw0 / eps))))) + 1;
  g.ny = (ny0 - 1) * f + 1;
  FdConfig fc;
  fc.traction = [g, eps, c](double t, std::vector<double>&, std::vector<double>& ty) {
    const double chi = t > 0.0 ? std::exp(-1.0 / t) : 0.0;
    for (int i = 0; i < g.nx; ++i) {
      const double x = g.x(i);
      ty[i] = eps * eps * chi * std::exp(std::cos(x) - 1.0) * std::cos((x - c * t) / eps);
    }
  };
  FdSolver s(g, ElasticMedium::from_ratio(r), fc);
  const int n0 = FdSolver::steps_for(T, 0.5 * (g.hx() * f) / std::sqrt(r)).first;
  s.set_dt(T / (n0 * f));
  s.advance_to(T);
  std::vector<double> out;
  for (int j = 0; j * g.hy <= 0.5 + 1e-12; j += f)
    for (int i = 0; i < g.nx; i += f) {
      out.push_back(s.state().U(0, j, i));
      out.push_back(s.state().U(1, j, i));
    }
  return out;
}

/// Observed order log2(|u_1 - u_2| / |u_2 - u_3|) from three nested runs.
inline double self_convergence_order(double eps, int ppw0) {
  const auto a = oscillatory_run(eps, ppw0, 0), b = oscillatory_run(eps, ppw0, 1),
             c = oscillatory_run(eps, ppw0, 2);
  double d1 = 0.0, d2 = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    d1 = std::max(d1, std::abs(a[i] - b[i]));
    d2 = std::max(d2, std::abs(b[i] - c[i]));
  }
  return std::log2(d1 / d2);
}

}  // namespace rwave::fd_cases
