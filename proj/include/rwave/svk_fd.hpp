#pragma once

/// @file svk_fd.hpp
/// @brief Explicit finite-difference solver for the Saint Venant-Kirchhoff
/// displacement system on the strip 0 <= y <= y_max, periodic in x:
///     d_t^2 U = div P(grad U) + S(t, x, y),
///     -P(grad U) e_y = tau(t, x)       on y = 0,
///     U = 0                            on y = y_max,
/// with a cosine-ramp sponge layer in front of the bottom boundary.
///
/// Discretization: leapfrog in time; the divergence is taken from fluxes on
/// cell faces, where the gradient normal to the face is a one-cell difference
/// and the tangential gradient is the average of the two adjacent centered
/// differences. The traction condition is imposed with one ghost row below
/// y = 0, chosen per boundary node (2x2 Newton) so that the centered-difference
/// flux column matches the prescribed traction.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rwave/container.hpp"
#include "rwave/dispersion.hpp"
#include "rwave/errors.hpp"
#include "rwave/flux.hpp"

namespace rwave {

struct FdGrid {
  int nx = 64;          ///< periodic x nodes
  int ny = 64;          ///< y nodes j = 0..ny-1 (row ny-1 is the Dirichlet bottom)
  double Lx = 2.0 * std::numbers::pi;
  double hy = 0.1;

  double hx() const { return Lx / nx; }
  double x(int i) const { return i * hx(); }
  double y(int j) const { return j * hy; }
  double y_max() const { return (ny - 1) * hy; }
};

/// Displacement field with one ghost row: storage row r = j + 1, j = -1..ny-1.
struct FdField {
  using Arr = Eigen::Array<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  Arr u, v;

  FdField() = default;
  explicit FdField(const FdGrid& g) : u(Arr::Zero(g.ny + 1, g.nx)), v(Arr::Zero(g.ny + 1, g.nx)) {}

  double& U(int c, int j, int i) { return c == 0 ? u(j + 1, i) : v(j + 1, i); }
  double U(int c, int j, int i) const { return c == 0 ? u(j + 1, i) : v(j + 1, i); }
  double max_abs() const { return std::max(u.abs().maxCoeff(), v.abs().maxCoeff()); }
  bool finite() const { return u.allFinite() && v.allFinite(); }
};

enum class FdMode { nonlinear, linearized };

struct FdConfig {
  FdMode mode = FdMode::nonlinear;
  double cfl = 0.5;          ///< dt <= cfl * min(hx, hy) / sqrt(r)
  double sponge_width = 0.0; ///< thickness of the damping layer above the bottom
  double sponge_strength = 0.0;
  int newton_max = 8;
  double newton_tol = 1e-12;
  double energy_guard = std::numeric_limits<double>::infinity();
  /// Traction -P e_y on y = 0 at time t: fill tx[i], ty[i], i = 0..nx-1.
  std::function<void(double t, std::vector<double>& tx, std::vector<double>& ty)> traction;
  /// Interior body force S at time t, added to div P: fill (sx, sy) on rows 0..ny-2.
  std::function<void(double t, FdField& s)> source;
};

/// Stress P = (I + A) S(E) written out for speed; g = (u_x, u_y, v_x, v_y).
inline void svk_flux(double lam, double mu, bool linear, double a, double b, double c, double d,
                     double P[4]) {
  if (linear) {
    const double tr = a + d;
    P[0] = lam * tr + 2 * mu * a;
    P[1] = mu * (b + c);
    P[2] = mu * (b + c);
    P[3] = lam * tr + 2 * mu * d;
    return;
  }
  // E = (A + A^T + A^T A) / 2
  const double e11 = a + 0.5 * (a * a + c * c);
  const double e22 = d + 0.5 * (b * b + d * d);
  const double e12 = 0.5 * (b + c + a * b + c * d);
  const double tr = e11 + e22;
  const double s11 = lam * tr + 2 * mu * e11, s22 = lam * tr + 2 * mu * e22, s12 = 2 * mu * e12;
  P[0] = (1 + a) * s11 + b * s12;
  P[1] = (1 + a) * s12 + b * s22;
  P[2] = c * s11 + (1 + d) * s12;
  P[3] = c * s12 + (1 + d) * s22;
}

class FdSolver {
 public:
  FdSolver(const FdGrid& g, const ElasticMedium& m, FdConfig cfg)
      : g_(g), cfg_(std::move(cfg)), flux_(decompose_flux(m)), prev_(g), cur_(g), src_(g) {
    if (g.nx < 4 || g.ny < 4) throw DomainError("FdSolver: grid too small");
    lam_ = flux_.lambda;
    mu_ = flux_.mu;
    cd_ = std::sqrt(lam_ + 2 * mu_);
    dt_ = cfg_.cfl * std::min(g.hx(), g.hy) / cd_;
    sigma_.assign(g.ny, 0.0);
    if (cfg_.sponge_width > 0.0) {
      const double ys = g.y_max() - cfg_.sponge_width;
      for (int j = 0; j < g.ny; ++j) {
        const double y = g.y(j);
        if (y > ys) {
          const double s = std::min(1.0, (y - ys) / cfg_.sponge_width);
          sigma_[j] = cfg_.sponge_strength * 0.5 * (1.0 - std::cos(std::numbers::pi * s));
        }
      }
    }
    tx_.assign(g.nx, 0.0);
    ty_.assign(g.nx, 0.0);
    Fx_.resize(std::size_t(g.ny) * g.nx * 2);
    Fy_.resize(std::size_t(g.ny) * g.nx * 2);
  }

  const FdGrid& grid() const { return g_; }
  double dt() const { return dt_; }
  double time() const { return t_; }
  const FdField& state() const { return cur_; }
  const FdField& previous() const { return prev_; }
  const FluxDecomposition& flux() const { return flux_; }
  bool linear() const { return cfg_.mode == FdMode::linearized; }

  /// Use a step no larger than the CFL step (e.g. to land on output times).
  void set_dt(double dt) {
    const double dmax = cfg_.cfl * std::min(g_.hx(), g_.hy) / cd_;
    if (dt > dmax * (1 + 1e-12)) throw DomainError("FdSolver: dt violates the CFL bound");
    dt_ = dt;
  }

  /// Initial data: U at t0 - dt and at t0 (ghost rows recomputed).
  void set_state(const FdField& prev, const FdField& cur, double t0) {
    prev_ = prev;
    cur_ = cur;
    t_ = t0;
    apply_traction_bc(prev_, t0 - dt_);
    apply_traction_bc(cur_, t0);
  }

  /// Choose ghost values so that -P e_y (centered differences) equals the
  /// traction at time t. Returns the largest final residual.
  double apply_traction_bc(FdField& f, double t) {
    std::fill(tx_.begin(), tx_.end(), 0.0);
    std::fill(ty_.begin(), ty_.end(), 0.0);
    if (cfg_.traction && t > 0.0) cfg_.traction(t, tx_, ty_);
    const double hx = g_.hx(), hy = g_.hy;
    double worst = 0.0;
    for (int i = 0; i < g_.nx; ++i) {
      const int ip = (i + 1) % g_.nx, im = (i + g_.nx - 1) % g_.nx;
      const double a = (f.U(0, 0, ip) - f.U(0, 0, im)) / (2 * hx);
      const double c = (f.U(1, 0, ip) - f.U(1, 0, im)) / (2 * hx);
      double gu = f.U(0, -1, i), gv = f.U(1, -1, i);
      const double u1 = f.U(0, 1, i), v1 = f.U(1, 1, i);
      double res = 0.0;
      for (int it = 0; it <= cfg_.newton_max; ++it) {
        const double b = (u1 - gu) / (2 * hy), d = (v1 - gv) / (2 * hy);
        double P[4];
        svk_flux(lam_, mu_, linear(), a, b, c, d, P);
        const double r0 = -P[1] - tx_[i], r1 = -P[3] - ty_[i];
        res = std::max(std::abs(r0), std::abs(r1));
        const double scale = 1.0 + std::abs(tx_[i]) + std::abs(ty_[i]);
        if (res <= cfg_.newton_tol * scale && it > 0) break;
        if (it == cfg_.newton_max) {
          throw DivergenceError("traction closure: Newton did not converge (residual " +
                                std::to_string(res) + ")");
        }
        // d(-P col2)/d(ghost) = (dP/db, dP/dd) * (1 / (2 hy))
        double J[2][2];
        jacobian_col2(a, b, c, d, J);
        const double s = 1.0 / (2 * hy);
        const double m00 = J[0][0] * s, m01 = J[0][1] * s, m10 = J[1][0] * s, m11 = J[1][1] * s;
        const double det = m00 * m11 - m01 * m10;
        if (std::abs(det) < 1e-300) throw DivergenceError("traction closure: singular Jacobian");
        gu -= (m11 * r0 - m01 * r1) / det;
        gv -= (-m10 * r0 + m00 * r1) / det;
      }
      f.U(0, -1, i) = gu;
      f.U(1, -1, i) = gv;
      worst = std::max(worst, res);
    }
    last_bc_residual_ = worst;
    return worst;
  }

  double last_bc_residual() const { return last_bc_residual_; }

  /// Acceleration div P + S at every row 0..ny-2 of f (ghost row must be set).
  void acceleration(const FdField& f, double t, FdField& acc) {
    const int nx = g_.nx, ny = g_.ny;
    const double hx = g_.hx(), hy = g_.hy;
    const bool lin = linear();
    // x-faces (i + 1/2, j), j = 0..ny-2: store P col 0 (P00, P10).
    for (int j = 0; j <= ny - 2; ++j)
      for (int i = 0; i < nx; ++i) {
        const int ip = (i + 1) % nx;
        const double a = (f.U(0, j, ip) - f.U(0, j, i)) / hx;
        const double c = (f.U(1, j, ip) - f.U(1, j, i)) / hx;
        const double b = 0.25 * (f.U(0, j + 1, i) - f.U(0, j - 1, i) + f.U(0, j + 1, ip) -
                                 f.U(0, j - 1, ip)) / hy;
        const double d = 0.25 * (f.U(1, j + 1, i) - f.U(1, j - 1, i) + f.U(1, j + 1, ip) -
                                 f.U(1, j - 1, ip)) / hy;
        double P[4];
        svk_flux(lam_, mu_, lin, a, b, c, d, P);
        const std::size_t k = (std::size_t(j) * nx + i) * 2;
        Fx_[k] = P[0];
        Fx_[k + 1] = P[2];
      }
    // y-faces (i, j - 1/2), j = 0..ny-1: store P col 1 (P01, P11).
    for (int j = 0; j <= ny - 1; ++j)
      for (int i = 0; i < nx; ++i) {
        const int ip = (i + 1) % nx, im = (i + nx - 1) % nx;
        const double b = (f.U(0, j, i) - f.U(0, j - 1, i)) / hy;
        const double d = (f.U(1, j, i) - f.U(1, j - 1, i)) / hy;
        const double a = 0.25 * (f.U(0, j, ip) - f.U(0, j, im) + f.U(0, j - 1, ip) -
                                 f.U(0, j - 1, im)) / hx;
        const double c = 0.25 * (f.U(1, j, ip) - f.U(1, j, im) + f.U(1, j - 1, ip) -
                                 f.U(1, j - 1, im)) / hx;
        double P[4];
        svk_flux(lam_, mu_, lin, a, b, c, d, P);
        const std::size_t k = (std::size_t(j) * nx + i) * 2;
        Fy_[k] = P[1];
        Fy_[k + 1] = P[3];
      }
    if (acc.u.rows() != ny + 1) acc = FdField(g_);
    for (int j = 0; j <= ny - 2; ++j)
      for (int i = 0; i < nx; ++i) {
        const int im = (i + nx - 1) % nx;
        const std::size_t kx = (std::size_t(j) * nx + i) * 2, kxm = (std::size_t(j) * nx + im) * 2;
        const std::size_t ky = (std::size_t(j) * nx + i) * 2, kyp = (std::size_t(j + 1) * nx + i) * 2;
        acc.U(0, j, i) = (Fx_[kx] - Fx_[kxm]) / hx + (Fy_[kyp] - Fy_[ky]) / hy;
        acc.U(1, j, i) = (Fx_[kx + 1] - Fx_[kxm + 1]) / hx + (Fy_[kyp + 1] - Fy_[ky + 1]) / hy;
      }
    if (cfg_.source) {
      src_.u.setZero();
      src_.v.setZero();
      cfg_.source(t, src_);
      acc.u += src_.u;
      acc.v += src_.v;
    }
  }

  /// One leapfrog step.
  void step() {
    acceleration(cur_, t_, acc_);
    const int nx = g_.nx, ny = g_.ny;
    const double dt2 = dt_ * dt_;
    for (int j = 0; j <= ny - 2; ++j) {
      const double s = 0.5 * sigma_[j] * dt_;
      for (int i = 0; i < nx; ++i)
        for (int c = 0; c < 2; ++c) {
          const double un = cur_.U(c, j, i), um = prev_.U(c, j, i);
          prev_.U(c, j, i) = (2.0 * un - (1.0 - s) * um + dt2 * acc_.U(c, j, i)) / (1.0 + s);
        }
    }
    for (int i = 0; i < nx; ++i) {
      prev_.U(0, ny - 1, i) = 0.0;
      prev_.U(1, ny - 1, i) = 0.0;
    }
    std::swap(prev_, cur_);
    t_ += dt_;
    apply_traction_bc(cur_, t_);
    if (!cur_.finite()) throw InstabilityError("FdSolver: non-finite state at t=" + std::to_string(t_));
    if (std::isfinite(cfg_.energy_guard) && energy() > cfg_.energy_guard) {
      throw InstabilityError("FdSolver: energy guard exceeded at t=" + std::to_string(t_));
    }
  }

  /// Advance to time T. From a quiescent start the step is adjusted to land
  /// on T exactly; otherwise T - t must be a whole number of steps.
  void advance_to(double T) {
    if (T <= t_) return;
    const double dmax = cfg_.cfl * std::min(g_.hx(), g_.hy) / cd_;
    int n = int(std::llround((T - t_) / dt_));
    if (std::abs(n * dt_ - (T - t_)) > 1e-9 * dt_) {
      if (t_ > 0.0 || cur_.max_abs() > 0.0 || prev_.max_abs() > 0.0) {
        throw DomainError("FdSolver::advance_to: target is not a whole number of steps");
      }
      n = int(std::ceil((T - t_) / dmax - 1e-9));
      dt_ = (T - t_) / n;
    }
    for (int k = 0; k < n; ++k) step();
    t_ = T;
  }

  /// Number of steps and step size landing on T from t = 0 within the CFL bound.
  static std::pair<int, double> steps_for(double T, double dt_max) {
    const int n = std::max(1, int(std::ceil(T / dt_max - 1e-9)));
    return {n, T / n};
  }

  /// Discrete energy: kinetic (leapfrog velocity) + stored energy of the
  /// centered gradient (Saint Venant-Kirchhoff W = lam/2 (trE)^2 + mu |E|^2).
  double energy() const {
    const int nx = g_.nx, ny = g_.ny;
    const double hx = g_.hx(), hy = g_.hy;
    double kin = 0.0, pot = 0.0;
    for (int j = 0; j <= ny - 2; ++j)
      for (int i = 0; i < nx; ++i) {
        const int ip = (i + 1) % nx, im = (i + nx - 1) % nx;
        const double du = (cur_.U(0, j, i) - prev_.U(0, j, i)) / dt_;
        const double dv = (cur_.U(1, j, i) - prev_.U(1, j, i)) / dt_;
        const double w = (j == 0) ? 0.5 : 1.0;
        kin += w * 0.5 * (du * du + dv * dv);
        const double a = (cur_.U(0, j, ip) - cur_.U(0, j, im)) / (2 * hx);
        const double c = (cur_.U(1, j, ip) - cur_.U(1, j, im)) / (2 * hx);
        const double b = (cur_.U(0, j + 1, i) - cur_.U(0, j - 1, i)) / (2 * hy);
        const double d = (cur_.U(1, j + 1, i) - cur_.U(1, j - 1, i)) / (2 * hy);
        double e11, e22, e12;
        if (linear()) {
          e11 = a;
          e22 = d;
          e12 = 0.5 * (b + c);
        } else {
          e11 = a + 0.5 * (a * a + c * c);
          e22 = d + 0.5 * (b * b + d * d);
          e12 = 0.5 * (b + c + a * b + c * d);
        }
        const double tr = e11 + e22;
        pot += w * (0.5 * lam_ * tr * tr + mu_ * (e11 * e11 + e22 * e22 + 2 * e12 * e12));
      }
    return (kin + pot) * hx * hy;
  }

  /// Serialize the current state.
  void save(const std::string& path, const nlohmann::json& extra = {}) const {
    Container c;
    c.kind = "svk_fd_snapshot";
    c.meta = {{"nx", g_.nx}, {"ny", g_.ny}, {"Lx", g_.Lx}, {"hy", g_.hy}, {"t", t_},
              {"lambda", lam_}, {"mu", mu_}, {"mode", linear() ? "linearized" : "nonlinear"},
              {"layout", "u[j][i], v[j][i] for j = -1..ny-1 (ghost row first), row-major"}};
    if (!extra.is_null()) c.meta["extra"] = extra;
    c.put_real("u", {g_.ny + 1, g_.nx}, cur_.u.data(), std::size_t(cur_.u.size()));
    c.put_real("v", {g_.ny + 1, g_.nx}, cur_.v.data(), std::size_t(cur_.v.size()));
    c.write(path);
  }

 private:
  FdGrid g_;
  FdConfig cfg_;
  FluxDecomposition flux_;
  double lam_ = 1.0, mu_ = 1.0, cd_ = 1.0, dt_ = 0.0, t_ = 0.0;
  std::vector<double> sigma_, tx_, ty_, Fx_, Fy_;
  FdField prev_, cur_, acc_, src_;
  double last_bc_residual_ = 0.0;

  /// Jacobian of P col 2 (entries P01, P11) with respect to (u_y, v_y).
  void jacobian_col2(double a, double b, double c, double d, double J[2][2]) const {
    const Grad g{a, b, c, d};
    const int rows[2] = {1, 3}, cols[2] = {1, 3};
    for (int r = 0; r < 2; ++r)
      for (int s = 0; s < 2; ++s) {
        const int e = rows[r], k = cols[s];
        double v = flux_.L[e][k];
        if (!linear()) {
          for (int p = 0; p < 4; ++p) {
            v += 2.0 * flux_.Q[e][k][p] * g[p];
            for (int q = 0; q < 4; ++q) v += 3.0 * flux_.C[e][k][p][q] * g[p] * g[q];
          }
        }
        J[r][s] = v;
      }
  }
};

}  // namespace rwave
