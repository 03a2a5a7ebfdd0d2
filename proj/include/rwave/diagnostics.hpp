#pragma once

/// @file diagnostics.hpp
/// @brief epsilon-weighted norms, the energy functional, PDE residual scans of
/// approximate solutions, log-log slope fits and CSV/JSON emission.

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "rwave/errors.hpp"
#include "rwave/flux.hpp"

namespace rwave {

// ---------------------------------------------------------------------------
// Finite-difference weights
// ---------------------------------------------------------------------------

/// Fornberg weights for the m-th derivative at z from nodes x[0..n-1].
inline std::vector<double> fd_weights(double z, const std::vector<double>& x, int m) {
  const int n = int(x.size());
  std::vector<std::vector<double>> c(n, std::vector<double>(m + 1, 0.0));
  double c1 = 1.0, c4 = x[0] - z;
  c[0][0] = 1.0;
  for (int i = 1; i < n; ++i) {
    const int mn = std::min(i, m);
    double c2 = 1.0;
    const double c5 = c4;
    c4 = x[i] - z;
    for (int j = 0; j < i; ++j) {
      const double c3 = x[i] - x[j];
      c2 *= c3;
      if (j == i - 1) {
        for (int k = mn; k >= 1; --k) c[i][k] = c1 * (k * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
        c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
      }
      for (int k = mn; k >= 1; --k) c[j][k] = (c4 * c[j][k] - k * c[j][k - 1]) / c3;
      c[j][0] = c4 * c[j][0] / c3;
    }
    c1 = c2;
  }
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i) w[i] = c[i][m];
  return w;
}

/// Fourth-order stencil (integer offsets and weights, unit spacing) for the
/// m-th derivative. `lo`/`hi` bound the admissible offsets (to stay inside a
/// domain); the stencil is centered when possible, otherwise shifted.
struct Stencil {
  std::vector<int> off;
  std::vector<double> w;
};

inline Stencil stencil4(int m, int lo = -1000, int hi = 1000) {
  Stencil s;
  if (m == 0) {
    s.off = {0};
    s.w = {1.0};
    return s;
  }
  // Central: 2p+1 points with p = floor((m+1)/2) + 1 gives order >= 4.
  const int p = (m + 1) / 2 + 1;
  int npts = 2 * p + 1;
  int start = -p;
  if (start < lo || start + npts - 1 > hi) {
    npts = m + 4;  // one-sided stencils of order 4
    start = std::clamp(-npts / 2, lo, hi - npts + 1);
    if (start < lo) throw DomainError("stencil4: domain too small for the stencil");
  }
  std::vector<double> x(npts);
  for (int i = 0; i < npts; ++i) x[i] = start + i;
  const auto w = fd_weights(0.0, x, m);
  for (int i = 0; i < npts; ++i) {
    if (std::abs(w[i]) < 1e-15) continue;
    s.off.push_back(start + i);
    s.w.push_back(w[i]);
  }
  return s;
}

// ---------------------------------------------------------------------------
// epsilon-weighted norms
// ---------------------------------------------------------------------------

struct NormSpec {
  int s = 0;  ///< order of (t, x, y) derivatives
  int k = 0;  ///< extra order of spatial derivatives
  double eps = 1.0;
};

/// Scalar time series on a uniform grid: x periodic over [0, Lx), y in
/// [0, (ny-1) hy], time levels t0 + i dt. frames[i](j, l) = u(t_i, x_l, y_j).
struct GridSeries {
  double t0 = 0.0, dt = 1.0;
  double Lx = 1.0, hy = 1.0;
  int nx = 0, ny = 0;
  std::vector<Eigen::ArrayXXd> frames;

  double hx() const { return Lx / nx; }
  int nt() const { return int(frames.size()); }

  template <class F>
  static GridSeries sample(F&& f, double t0, double dt, int nt, double Lx, int nx, double hy, int ny) {
    GridSeries g{t0, dt, Lx, hy, nx, ny, {}};
    for (int i = 0; i < nt; ++i) {
      Eigen::ArrayXXd a(ny, nx);
      for (int j = 0; j < ny; ++j)
        for (int l = 0; l < nx; ++l) a(j, l) = f(t0 + i * dt, l * Lx / nx, j * hy);
      g.frames.push_back(std::move(a));
    }
    return g;
  }
};

/// Fourth-order quadrature weights on [0, (n-1) h] (Gregory end corrections).
inline Eigen::ArrayXd gregory_weights(int n, double h) {
  Eigen::ArrayXd w = Eigen::ArrayXd::Constant(n, h);
  if (n < 8) throw DomainError("gregory_weights: need at least 8 nodes");
  const double c[4] = {3.0 / 8.0, 7.0 / 6.0, 23.0 / 24.0, 1.0};
  for (int i = 0; i < 3; ++i) {
    w(i) = c[i] * h;
    w(n - 1 - i) = c[i] * h;
  }
  return w;
}

/// d^{mt}_t d^{mx}_x d^{my}_y u at time level it, fourth-order stencils.
inline Eigen::ArrayXXd grid_derivative(const GridSeries& g, int it, int mt, int mx, int my) {
  const Stencil st = stencil4(mt, -it, g.nt() - 1 - it);
  Eigen::ArrayXXd base = Eigen::ArrayXXd::Zero(g.ny, g.nx);
  for (std::size_t a = 0; a < st.off.size(); ++a) base += st.w[a] * g.frames[it + st.off[a]];
  base /= std::pow(g.dt, mt);
  Eigen::ArrayXXd dx = base;
  if (mx > 0) {
    const Stencil sx = stencil4(mx);
    dx.setZero();
    for (int l = 0; l < g.nx; ++l)
      for (std::size_t a = 0; a < sx.off.size(); ++a) {
        const int ll = ((l + sx.off[a]) % g.nx + g.nx) % g.nx;
        dx.col(l) += sx.w[a] * base.col(ll);
      }
    dx /= std::pow(g.hx(), mx);
  }
  if (my == 0) return dx;
  Eigen::ArrayXXd dy = Eigen::ArrayXXd::Zero(g.ny, g.nx);
  for (int j = 0; j < g.ny; ++j) {
    const Stencil sy = stencil4(my, -j, g.ny - 1 - j);
    for (std::size_t a = 0; a < sy.off.size(); ++a) dy.row(j) += sy.w[a] * dx.row(j + sy.off[a]);
  }
  return dy / std::pow(g.hy, my);
}

/// L2 norm over the half-plane grid (periodic trapezoid in x, Gregory in y).
inline double grid_l2(const GridSeries& g, const Eigen::ArrayXXd& a) {
  const Eigen::ArrayXd wy = gregory_weights(g.ny, g.hy);
  double s = 0.0;
  for (int j = 0; j < g.ny; ++j) s += wy(j) * a.row(j).square().sum();
  return std::sqrt(s * g.hx());
}

/// |u(t_it)|_{s,k,eps}: sup over |alpha| <= s (in t, x, y) and |beta| <= k
/// (in x, y) of eps^{|alpha|+|beta|} ||d^alpha d^beta u||_{L2}. Exhaustive
/// over the multi-index set; s <= 4.
inline double eps_norm(const GridSeries& g, const NormSpec& spec, int it) {
  if (spec.s > 4) throw DomainError("eps_norm: s > 4 is not supported");
  if (spec.s < 0 || spec.k < 0 || !(spec.eps > 0.0)) throw DomainError("eps_norm: bad spec");
  double best = 0.0;
  for (int at = 0; at <= spec.s; ++at)
    for (int ax = 0; at + ax <= spec.s; ++ax)
      for (int ay = 0; at + ax + ay <= spec.s; ++ay)
        for (int bx = 0; bx <= spec.k; ++bx)
          for (int by = 0; bx + by <= spec.k; ++by) {
            const int order = at + ax + ay + bx + by;
            const auto d = grid_derivative(g, it, at, ax + bx, ay + by);
            best = std::max(best, std::pow(spec.eps, order) * grid_l2(g, d));
          }
  return best;
}

/// Result of the energy functional, with the omega = d_t nu consistency check.
struct EnergyReport {
  double energy = 0.0;
  double omega_mismatch = 0.0;  ///< ||omega - d_t nu||_{L2} / max(||omega||, tiny)
  bool consistent = true;
};

/// E = |eps^2 D_x^2 nu|_{s,eps} + |eps D nu|_{s,eps} + |eps^2 D omega|_{s,eps},
/// D = (d_t, d_x, d_y), D_x^2 = all second spatial derivatives; vector
/// quantities use the Euclidean norm of their components in L2.
inline EnergyReport energy(const GridSeries& nu, const GridSeries& omega, int s, double eps,
                           int it, double mismatch_tol = 1e-3) {
  auto vec_norm = [&](const GridSeries& g, const std::vector<std::array<int, 3>>& ds) {
    double best = 0.0;
    for (int at = 0; at <= s; ++at)
      for (int ax = 0; at + ax <= s; ++ax)
        for (int ay = 0; at + ax + ay <= s; ++ay) {
          double acc = 0.0;
          for (const auto& d : ds) {
            const auto a = grid_derivative(g, it, at + d[0], ax + d[1], ay + d[2]);
            const double n = grid_l2(g, a);
            acc += n * n;
          }
          best = std::max(best, std::pow(eps, at + ax + ay) * std::sqrt(acc));
        }
    return best;
  };
  const std::vector<std::array<int, 3>> D2x = {{0, 2, 0}, {0, 1, 1}, {0, 1, 1}, {0, 0, 2}};
  const std::vector<std::array<int, 3>> D = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  EnergyReport r;
  r.energy = eps * eps * vec_norm(nu, D2x) + eps * vec_norm(nu, D) + eps * eps * vec_norm(omega, D);
  const auto dtnu = grid_derivative(nu, it, 1, 0, 0);
  const auto& om = omega.frames[it];
  const double on = grid_l2(omega, om);
  r.omega_mismatch = grid_l2(nu, om - dtnu) / std::max(on, 1e-300);
  r.consistent = r.omega_mismatch <= mismatch_tol || on == 0.0;
  return r;
}

// ---------------------------------------------------------------------------
// Residual scans
// ---------------------------------------------------------------------------

/// Displacement evaluator U(t, x, y) -> (u, v).
using FieldEval = std::function<std::array<double, 2>(double t, double x, double y)>;
/// Boundary traction target tau(t, x) = eps^2 (f, g) in the convention -P e_y = tau.
using TractionEval = std::function<std::array<double, 2>(double t, double x)>;

struct ResidualPoint {
  double t = 0.0, x = 0.0, y = 0.0;
  double interior = 0.0;  ///< |d_t^2 U - div P(grad U)|
  double boundary = 0.0;  ///< |-P(grad U) e_y - tau| (y = 0 points only)
};

struct ResidualSummary {
  double interior_sup = 0.0, interior_l2 = 0.0;
  double boundary_sup = 0.0, boundary_l2 = 0.0;
  std::vector<ResidualPoint> points;
};

/// Pointwise PDE residuals of an evaluator with fourth-order differences of
/// step h (time step ht). Derivatives in y use one-sided stencils near y = 0.
class ResidualProbe {
 public:
  /// `linearized` drops the quadratic and cubic stress terms.
  ResidualProbe(const FluxDecomposition& f, FieldEval U, double h, double ht, bool linearized = false)
      : f_(f), U_(std::move(U)), h_(h), ht_(ht), linearized_(linearized) {}

  /// Gradient at (t, x, y); the y stencil may not reach below offset `lo`
  /// (default: the wall).
  std::array<double, 4> gradient(double t, double x, double y, int lo = -1000) const {
    const Stencil sx = stencil4(1);
    const Stencil sy = stencil4(1, std::max(lo, -wall_index(y)), 1000);
    std::array<double, 4> g{0, 0, 0, 0};
    for (std::size_t a = 0; a < sx.off.size(); ++a) {
      const auto v = U_(t, x + sx.off[a] * h_, y);
      g[0] += sx.w[a] * v[0];
      g[2] += sx.w[a] * v[1];
    }
    for (std::size_t a = 0; a < sy.off.size(); ++a) {
      const auto v = U_(t, x, y + sy.off[a] * h_);
      g[1] += sy.w[a] * v[0];
      g[3] += sy.w[a] * v[1];
    }
    for (auto& e : g) e /= h_;
    return g;
  }

  Flux stress(double t, double x, double y, int lo = -1000) const {
    const auto g = gradient(t, x, y, lo);
    Flux P;
    if (linearized_) return f_.linear(g);
    const Flux l = f_.linear(g), q = f_.quadratic(g), c = f_.cubic(g);
    for (int e = 0; e < 4; ++e) P[e] = l[e] + q[e] + c[e];
    return P;
  }

  /// Interior residual vector d_t^2 U - div P at (t, x, y), y >= 0.
  std::array<double, 2> interior(double t, double x, double y) const {
    const Stencil st = stencil4(2);
    std::array<double, 2> r{0, 0};
    for (std::size_t a = 0; a < st.off.size(); ++a) {
      const auto v = U_(t + st.off[a] * ht_, x, y);
      r[0] += st.w[a] * v[0] / (ht_ * ht_);
      r[1] += st.w[a] * v[1] / (ht_ * ht_);
    }
    // Every inner gradient uses the stencil shape admissible at the lowest
    // outer node, so the inner truncation error is smooth in y and the nested
    // difference stays fourth order next to the wall.
    const Stencil sx = stencil4(1);
    const int jy = wall_index(y);
    const Stencil sy = stencil4(1, -jy, 1000);
    const int lo = -(jy + sy.off.front());
    for (std::size_t a = 0; a < sx.off.size(); ++a) {
      const Flux P = stress(t, x + sx.off[a] * h_, y, lo);
      r[0] -= sx.w[a] * P[0] / h_;
      r[1] -= sx.w[a] * P[2] / h_;
    }
    for (std::size_t a = 0; a < sy.off.size(); ++a) {
      const Flux P = stress(t, x, y + sy.off[a] * h_, lo);
      r[0] -= sy.w[a] * P[1] / h_;
      r[1] -= sy.w[a] * P[3] / h_;
    }
    return r;
  }

  /// Boundary residual -P e_y - tau at (t, x, 0).
  std::array<double, 2> boundary(double t, double x, const TractionEval& tau) const {
    const Flux P = stress(t, x, 0.0);
    const auto g = tau ? tau(t, x) : std::array<double, 2>{0, 0};
    return {-P[1] - g[0], -P[3] - g[1]};
  }

 private:
  int wall_index(double y) const { return int(std::floor(y / h_ + 1e-9)); }

  const FluxDecomposition& f_;
  FieldEval U_;
  double h_, ht_;
  bool linearized_;
};

/// Scan the residual on the product of sample sets; boundary residual at y = 0.
inline ResidualSummary residual_scan(const FluxDecomposition& f, const FieldEval& U,
                                     const TractionEval& tau, const std::vector<double>& ts,
                                     const std::vector<double>& xs, const std::vector<double>& ys,
                                     double h, double ht, bool linearized = false) {
  ResidualProbe probe(f, U, h, ht, linearized);
  ResidualSummary s;
  double si = 0.0, sb = 0.0;
  int ni = 0, nb = 0;
  for (double t : ts)
    for (double x : xs) {
      const auto b = probe.boundary(t, x, tau);
      const double bm = std::hypot(b[0], b[1]);
      s.boundary_sup = std::max(s.boundary_sup, bm);
      sb += bm * bm;
      ++nb;
      for (double y : ys) {
        const auto r = probe.interior(t, x, y);
        const double m = std::hypot(r[0], r[1]);
        s.interior_sup = std::max(s.interior_sup, m);
        si += m * m;
        ++ni;
        s.points.push_back({t, x, y, m, y == 0.0 ? bm : 0.0});
      }
    }
  s.interior_l2 = ni ? std::sqrt(si / ni) : 0.0;
  s.boundary_l2 = nb ? std::sqrt(sb / nb) : 0.0;
  return s;
}

// ---------------------------------------------------------------------------
// Slope fits and emission
// ---------------------------------------------------------------------------

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

/// Least-squares fit of log(value) against log(eps).
inline SlopeFit slope_fit(const std::vector<double>& eps, const std::vector<double>& values) {
  if (eps.size() != values.size() || eps.size() < 3) {
    throw ConfigError("slope_fit: need at least 3 (eps, value) pairs");
  }
  const std::size_t n = eps.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(eps[i] > 0.0) || !(values[i] > 0.0)) throw DomainError("slope_fit: values must be > 0");
    const double x = std::log(eps[i]), y = std::log(values[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    syy += y * y;
  }
  SlopeFit f;
  const double den = n * sxx - sx * sx;
  f.slope = (n * sxy - sx * sy) / den;
  f.intercept = (sy - f.slope * sx) / n;
  const double ss_tot = syy - sy * sy / n;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = std::log(values[i]) - (f.intercept + f.slope * std::log(eps[i]));
    ss_res += r * r;
  }
  f.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
  return f;
}

/// Write a CSV table with a header row.
inline void write_csv(const std::string& path, const std::vector<std::string>& header,
                      const std::vector<std::vector<double>>& rows) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open '" + path + "' for writing");
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << "\n";
  out.precision(17);
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) out << (i ? "," : "") << r[i];
    out << "\n";
  }
}

inline void write_json(const std::string& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open '" + path + "' for writing");
  out << j.dump(2) << "\n";
}

}  // namespace rwave
