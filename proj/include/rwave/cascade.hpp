#pragma once

/// @file cascade.hpp
/// @brief Construction of the profiles U_k, k = 2..N, of the two-scale
/// expansion
///
///   u = sum_k eps^k U_k(t, x, y, theta = (x - c t) / eps, Y = y / eps)
///
/// for a wavetrain driven by the boundary traction eps^2 (f, g)(t, x, theta).
///
/// Each profile splits into
///   * a fast part  sum_{n != 0} e^{i n theta} U_k^n(t, x, Y) plus a decaying
///     mode-0 part, solved exactly in exponential-polynomial form;
///   * an amplitude part alpha_k(t, x, theta) r-hat(Y), alpha_k fixed by the
///     solvability condition of the next order (amplitude equation);
///   * a mean part Ubar_k(t, x, y) solved on a grid with the linear
///     finite-difference solver and carried into the algebra as Taylor jets
///     at y = 0.
///
/// Sign convention: the exact problem is d_t^2 u = Div P(grad u) in y > 0
/// with -P e_y = eps^2 (f, g) on y = 0. Writing the expansion into it,
///
///   L_ff U_{m+1} = H_m = -L_fs U_m - L_ss U_{m-1} + Div_f [P]_m + Div_s [P]_{m-1}
///   l_f U_{m+1}  = h_m = -l_s U_m - [P e_y]_m - (f, g) delta_{m,2}     (Y = 0)
///
/// where [P]_m is the eps^m part of the nonlinear flux, built from the
/// gradient pieces G_a = grad_f U_{a+1} + grad_s U_a (grad u = sum eps^a G_a).

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rwave/amplitude.hpp"
#include "rwave/container.hpp"
#include "rwave/dispersion.hpp"
#include "rwave/errors.hpp"
#include "rwave/exp_poly.hpp"
#include "rwave/fields.hpp"
#include "rwave/flux.hpp"
#include "rwave/slow_grid.hpp"
#include "rwave/svk_fd.hpp"

namespace rwave {

using Vec2EP = std::array<ExpPolyA, 2>;
using Trace = std::array<SlowArray, 2>;  ///< a 2-vector of slow arrays

/// Boundary forcing (f, g) split into theta modes 0..ntheta on the slow grid.
struct BoundaryForcing {
  std::vector<Trace> modes;

  /// Sample (f, g)(t, x, theta) and take its theta Fourier coefficients.
  template <class F>
  static BoundaryForcing sample(const SlowGrid& g, int ntheta, F&& fn) {
    const int M = 4 * (ntheta + 1);
    BoundaryForcing out;
    out.modes.assign(ntheta + 1, Trace{g.zeros(), g.zeros()});
    const double pi = std::numbers::pi;
    for (int i = 0; i < g.nt; ++i)
      for (int j = 0; j < g.nx; ++j)
        for (int s = 0; s < M; ++s) {
          const double th = 2.0 * pi * s / M;
          const std::array<double, 2> v = fn(g.t(i), g.x(j), th);
          for (int n = 0; n <= ntheta; ++n) {
            const cd w = std::exp(cd(0.0, -n * th)) / double(M);
            out.modes[n][0](g.idx(i, j)) += v[0] * w;
            out.modes[n][1](g.idx(i, j)) += v[1] * w;
          }
        }
    return out;
  }
};

// ---------------------------------------------------------------------------
// Exact solves of the fast problems
// ---------------------------------------------------------------------------

/// Solvers for L_ff^n U = F, l_f^n U = h on the half line Y > 0, one theta
/// mode at a time (L_ff^n is L_ff with d_theta -> i n).
class FastSolver {
 public:
  explicit FastSolver(const RayleighData& d) : d_(d), Minv_(lopatinski_restricted_inverse_matrix(d)) {}

  const RayleighData& data() const { return d_; }

  /// L_ff^n applied to U (exact, in exponential-polynomial form).
  Vec2EP apply_Lff(const Vec2EP& U, int n) const {
    const double r = d_.r, c = d_.c, nn = double(n);
    const cd in(0.0, nn);
    const ExpPolyA u1 = U[0].derivative(), v1 = U[1].derivative();
    Vec2EP out;
    out[0] = U[0] * cd(-nn * nn * (c * c - r)) - v1 * (in * (r - 1.0)) - u1.derivative();
    out[1] = U[1] * cd(-nn * nn * (c * c - 1.0)) - u1 * (in * (r - 1.0)) -
             v1.derivative() * cd(r);
    out[0].normalize();
    out[1].normalize();
    return out;
  }

  /// l_f^n U at Y = 0.
  Trace trace_lf(const SlowGrid& g, const Vec2EP& U, int n) const {
    const double r = d_.r;
    const cd in(0.0, double(n));
    auto at0 = [&](const ExpPolyA& e) { return e.empty() ? g.zeros() : SlowArray(e.value_at_zero()); };
    const SlowArray u0 = at0(U[0]), v0 = at0(U[1]);
    const SlowArray du = at0(U[0].derivative()), dv = at0(U[1].derivative());
    return Trace{in * v0 + du, (r - 2.0) * in * u0 + r * dv};
  }

  /// Mode 0: the decaying solution -diag(1, r) U'' = F, i.e. double tails.
  Vec2EP solve_zero_mode(const Vec2EP& F) const {
    Vec2EP U;
    if (!F[0].empty()) U[0] = F[0].double_tail().normalize();
    if (!F[1].empty()) U[1] = (F[1].double_tail() * cd(1.0 / d_.r)).normalize();
    return U;
  }

  /// Mode n >= 1: a decaying particular solution through the first-order
  /// system W' = G(n) W + (0, 0, -F1, -F2 / r), diagonalized by R_j(n).
  /// The decaying components integrate from Y = 0, the growing ones from
  /// infinity.
  Vec2EP solve_particular(const Vec2EP& F, int n) const {
    Vec2EP U;
    if (F[0].empty() && F[1].empty()) return U;
    const auto L = d_.L(n);
    for (int j = 1; j <= 4; ++j) {
      ExpPolyA g;
      if (!F[0].empty()) g += F[0] * (-L[j - 1](2));
      if (!F[1].empty()) g += F[1] * (-L[j - 1](3) / d_.r);
      g.normalize();
      if (g.empty()) continue;
      const ExpPolyA s = g.duhamel(d_.exponent(n, j), j <= 2);
      const Vec4c R = d_.R(j, n);
      U[0] += s * R(0);
      U[1] += s * R(1);
    }
    U[0].normalize();
    U[1].normalize();
    return U;
  }

  /// Cokernel pairing q rhs_1 + omega_2 rhs_2 (zero iff rhs is in Im B_Lop).
  SlowArray pairing(const Trace& rhs) const {
    return d_.coker_vec(0) * rhs[0] + d_.coker_vec(1) * rhs[1];
  }

  /// Decaying homogeneous solution with l_f^n U_h = rhs (rhs in the image;
  /// the kernel component is left to the amplitude).
  Vec2EP solve_homogeneous(const Trace& rhs, int n) const {
    const cd in(0.0, double(n));
    const SlowArray s1 = (Minv_(0, 0) * rhs[0] + Minv_(0, 1) * rhs[1]) / in;
    const SlowArray s2 = (Minv_(1, 0) * rhs[0] + Minv_(1, 1) * rhs[1]) / in;
    const cd l1 = d_.exponent(n, 1), l2 = d_.exponent(n, 2);
    Vec2EP U;
    U[0].push(l1, 0, s1 * d_.r1(0));
    U[0].push(l2, 0, s2 * d_.r2(0));
    U[1].push(l1, 0, s1 * d_.r1(1));
    U[1].push(l2, 0, s2 * d_.r2(1));
    U[0].normalize();
    U[1].normalize();
    return U;
  }

  /// alpha r-hat(n, Y) with slow coefficient alpha.
  Vec2EP rhat(const SlowArray& alpha, int n) const {
    const cd l1 = d_.exponent(n, 1), l2 = d_.exponent(n, 2);
    Vec2EP U;
    for (int c = 0; c < 2; ++c) {
      U[c].push(l1, 0, alpha * (d_.omega2 * d_.r1(c)));
      U[c].push(l2, 0, alpha * (-d_.q * d_.r2(c)));
      U[c].normalize();
    }
    return U;
  }

 private:
  RayleighData d_;
  Mat2c Minv_;
};

// ---------------------------------------------------------------------------
// Profiles
// ---------------------------------------------------------------------------

struct MeanSolveConfig {
  int nx_factor = 4;             ///< FD x nodes per slow x node
  double y_max = 20.0;           ///< depth of the FD box
  double sponge_width = 4.0;
  double sponge_strength = 5.0;
  double cfl = 0.5;
  double y_store = 3.0;          ///< depth kept for evaluation
  double skip_tol = 1e-13;       ///< boundary data below this: mean is zero
};

/// Mean part Ubar_k(t, x, y): y-jets at y = 0 on the slow grid and gridded
/// values (slow t levels, slow x nodes, rows y = j hy) for evaluation.
struct MeanProfile {
  bool zero = true;
  Trace boundary;                 ///< l_s Ubar at y = 0
  std::vector<Trace> jets;        ///< Taylor coefficients in y at y = 0
  double hy = 0.0;
  int rows = 0;
  std::vector<Eigen::ArrayXXd> u, v;  ///< per slow t level: rows x nx
  double fd_dt = 0.0;
  int fd_nx = 0, fd_ny = 0;
};

struct Profile {
  int k = 0;
  VField base;                     ///< non-amplitude fast part (jet 0)
  std::vector<SlowArray> alpha;    ///< amplitude modes 0..ntheta (size 0 = zero)
  std::vector<SlowArray> alpha_t;  ///< exact time derivative of alpha
  AmplitudeHistory history;        ///< spectral amplitude records
  MeanProfile mean;
};

/// Diagnostics of one order of the construction.
struct OrderReport {
  int k = 0;
  double interior_residual = 0.0;  ///< |L_ff U_k - H'_{k-1}| / |H'_{k-1}|
  double boundary_residual = 0.0;  ///< |l_f U_k - h_{k-1}| / |h_{k-1}|
  double cond_a = 0.0;             ///< mean part of H'_{k-1} (relative)
  double cond_b = 0.0;             ///< mode-0 flux balance (relative)
  double cond_c = 0.0;             ///< cokernel pairing (relative)
  double negative_control = 0.0;   ///< pairing at order k+1 without alpha_k (relative)
  double mean_boundary = 0.0;      ///< max |b_k|
  bool mean_solved = false;
  double alpha_max = 0.0;
  double profile_max = 0.0;
  double seconds = 0.0;
};

/// Amplitude-equation coefficients read off the cascade pairing:
///   a_t(n) (d_t + c d_x) alpha^n + sum K(n; n1, n2) alpha^{n1} alpha^{n2} = -P0.
struct AmplitudeCoefficients {
  std::vector<cd> a_t, a_x;  ///< modes 0..ntheta (0 unused)
  Multiplier M;              ///< K / a_t, symmetric in (n1, n2)
  double speed = 0.0;        ///< a_x / a_t (mode 1)
  double speed_spread = 0.0; ///< max_n |a_x / a_t - speed|
  double symmetry_defect = 0.0;
};

struct CascadeConfig {
  double r = 3.0;
  int order = 4;   ///< N: profiles U_2..U_N
  int ntheta = 16;
  SlowGrid grid{64, 64, 1.0, 2.0 * std::numbers::pi};
  double prune_rel = 1e-14;
  AmplitudeOptions amplitude;
  double linearized_dt_max = 2e-3;
  MeanSolveConfig mean;
  double solvability_tol = 1e-8;  ///< gate on the three conditions (relative)
  bool enforce_solvability = true;
};

// ---------------------------------------------------------------------------
// The cascade
// ---------------------------------------------------------------------------

class Cascade {
 public:
  Cascade(CascadeConfig cfg, BoundaryForcing forcing)
      : cfg_(std::move(cfg)),
        d_(RayleighData::make(cfg_.r)),
        flux_(decompose_flux(ElasticMedium::from_ratio(cfg_.r))),
        fast_(d_),
        forcing_(std::move(forcing)) {
    if (cfg_.order < 2) throw ConfigError("cascade: order must be >= 2");
    if (cfg_.order > 5) {
      throw ConfigError("cascade: orders above 5 need the interior mean source (not supported)");
    }
    space_.grid = cfg_.grid;
    space_.ntheta = cfg_.ntheta;
    space_.max_jet = cfg_.order;
    space_.prune_rel = cfg_.prune_rel;
    if (forcing_.modes.empty()) {
      forcing_.modes.assign(cfg_.ntheta + 1, Trace{space_.zeros(), space_.zeros()});
    }
    if (int(forcing_.modes.size()) != cfg_.ntheta + 1) {
      throw ConfigError("cascade: forcing has the wrong number of theta modes");
    }
  }

  const CascadeConfig& config() const { return cfg_; }
  const FieldSpace& space() const { return space_; }
  const RayleighData& rayleigh() const { return d_; }
  const FastSolver& fast() const { return fast_; }
  const FluxDecomposition& flux() const { return flux_; }
  const AmplitudeCoefficients& coefficients() const { return coef_; }
  const std::vector<OrderReport>& reports() const { return reports_; }
  const std::map<int, Profile>& profiles() const { return U_; }
  const Profile& profile(int k) const { return U_.at(k); }
  bool has_profile(int k) const { return U_.count(k) > 0; }
  Profile& profile_mut(int k) { return U_[k]; }
  void set_profile(const Profile& p) { U_[p.k] = p; }
  void set_coefficients(const AmplitudeCoefficients& c) { coef_ = c; }

  /// Amplitude coefficients derived from the pairing on a tiny slow grid
  /// (constant-in-(t, x) test amplitudes make the pairing pointwise).
  static AmplitudeCoefficients derive_coefficients(double r, int ntheta) {
    CascadeConfig cc;
    cc.r = r;
    cc.order = 2;
    cc.ntheta = ntheta;
    cc.grid = SlowGrid{5, 4, 1.0, 2.0 * std::numbers::pi};
    Cascade probe(cc, BoundaryForcing{});
    const FieldSpace& s = probe.space_;
    const int N = ntheta;
    const int node = s.grid.idx(2, 1);
    auto pairing_with = [&](const std::vector<SlowArray>& a, const std::vector<SlowArray>& at) {
      Profile p = probe.empty_profile(2);
      p.alpha = a;
      p.alpha_t = at;
      probe.U_.clear();
      probe.U_[2] = p;
      return probe.pairing_at(2);
    };
    auto none = [&]() { return std::vector<SlowArray>(N + 1); };
    AmplitudeCoefficients out;
    out.a_t.assign(N + 1, 0.0);
    out.a_x.assign(N + 1, 0.0);
    out.M = Multiplier::zero(N);
    const SlowArray one = SlowArray::Ones(s.grid.size());
    const SlowArray wave = s.grid.sample([](double, double x) { return std::exp(cd(0.0, x)); });
    for (int n = 1; n <= N; ++n) {
      auto a = none(), at = none();
      at[n] = one;
      out.a_t[n] = pairing_with(a, at)[n](node);
      auto b = none();
      b[n] = wave;
      out.a_x[n] = pairing_with(b, none())[n](node) / (cd(0.0, 1.0) * wave(node));
    }
    for (int n = 1; n <= N; ++n)
      for (int n1 = n - N; 2 * n1 <= n; ++n1) {
        const int n2 = n - n1;
        if (n1 == 0 || n2 == 0 || std::abs(n1) > N || std::abs(n2) > N) continue;
        // Real test amplitudes: mode -m carries conj(alpha^m) = 1 as well.
        auto single = [&](int m) {
          auto a = none();
          a[m] = one;
          return pairing_with(a, none())[n](node);
        };
        if (n1 == n2) {
          out.M.M(n, n1 + N) = single(n1) / out.a_t[n];
        } else {
          // Polarization: remove the self-interactions of each mode.
          auto a = none();
          a[std::abs(n1)] = one;
          a[std::abs(n2)] = one;
          const cd P = pairing_with(a, none())[n](node) - single(std::abs(n1)) - single(std::abs(n2));
          const cd m = P / (2.0 * out.a_t[n]);
          out.M.M(n, n1 + N) = m;
          out.M.M(n, n2 + N) = m;
        }
      }
    out.speed = (out.a_x[1] / out.a_t[1]).real();
    for (int n = 1; n <= N; ++n) {
      out.speed_spread = std::max(out.speed_spread, std::abs(out.a_x[n] / out.a_t[n] - out.speed));
    }
    for (int n = 1; n <= N; ++n)
      for (int n1 = -N; n1 <= N; ++n1) {
        const int n2 = n - n1;
        if (std::abs(n2) > N) continue;
        out.symmetry_defect =
            std::max(out.symmetry_defect, std::abs(out.M(n, n1) - out.M(n, n2)));
      }
    return out;
  }

  /// Gate between orders: throws when any of the three conditions fails.
  static void check_solvability(const OrderReport& rep, double tol) {
    const double worst = std::max({rep.cond_a, rep.cond_b, rep.cond_c});
    if (worst <= tol) return;
    std::ostringstream msg;
    msg << std::scientific << std::setprecision(3) << "cascade: solvability violated at order "
        << rep.k << " (a=" << rep.cond_a << ", b=" << rep.cond_b << ", c=" << rep.cond_c << ")";
    throw SolvabilityError(msg.str(), worst);
  }

  /// Build U_2..U_N. Requires coefficients (derived if not set).
  void build() {
    if (coef_.a_t.empty()) coef_ = derive_coefficients(cfg_.r, cfg_.ntheta);
    U_.clear();
    H_.clear();
    h_.clear();
    P_.clear();
    reports_.clear();
    const int N = cfg_.order;
    for (int k = 2; k <= N; ++k) {
      const auto t0 = std::chrono::steady_clock::now();
      OrderReport rep;
      rep.k = k;
      solve_fast(k, rep);
      solve_amplitude(k, rep);
      finalize_order(k, rep);
      rep.profile_max = profile_max(U_.at(k));
      rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      reports_.push_back(rep);
    }
  }

  // -------------------------------------------------------------------------
  // Field assembly
  // -------------------------------------------------------------------------

  Profile empty_profile(int k) const {
    Profile p;
    p.k = k;
    p.base = {SField(space_), SField(space_)};
    p.alpha.assign(cfg_.ntheta + 1, SlowArray());
    p.alpha_t.assign(cfg_.ntheta + 1, SlowArray());
    return p;
  }

  /// U_k as a two-scale field (mean jets + fast parts).
  VField field(int k) const {
    auto it = U_.find(k);
    if (it == U_.end()) return {SField(space_), SField(space_)};
    return assemble(it->second, false);
  }

  /// d_t U_k, with the amplitude part differentiated exactly.
  VField field_t(int k) const {
    auto it = U_.find(k);
    if (it == U_.end()) return {SField(space_), SField(space_)};
    return assemble(it->second, true);
  }

  VField assemble(const Profile& p, bool time_derivative) const {
    VField out = p.base;
    if (time_derivative) {
      for (auto& f : out) f = field_ops::d_t(space_, f);
    }
    const auto& amp = time_derivative ? p.alpha_t : p.alpha;
    for (int n = 1; n <= cfg_.ntheta && n < int(amp.size()); ++n) {
      if (amp[n].size() == 0) continue;
      const Vec2EP a = fast_.rhat(amp[n], n);
      for (int c = 0; c < 2; ++c) out[c].fast(0, n) += a[c];
    }
    if (!p.mean.zero) {
      const int nj = int(p.mean.jets.size());
      for (int c = 0; c < 2; ++c) {
        if (out[c].njets() < nj) {
          SField ext(space_, nj);
          ext += out[c];
          out[c] = std::move(ext);
        }
        for (int j = 0; j < nj; ++j) {
          const SlowArray& m = p.mean.jets[j][c];
          out[c].jet(j).mean = time_derivative ? slow_dt(space_.grid, m) : m;
        }
      }
    }
    return out;
  }

  // -------------------------------------------------------------------------
  // Operators on two-scale fields
  // -------------------------------------------------------------------------

  GField grad_f(const VField& U) const {
    using namespace field_ops;
    return {d_theta(U[0]), d_Y(U[0]), d_theta(U[1]), d_Y(U[1])};
  }
  GField grad_s(const VField& U) const {
    using namespace field_ops;
    return {d_x(space_, U[0]), d_y(space_, U[0]), d_x(space_, U[1]), d_y(space_, U[1])};
  }

  /// G_a = grad_f U_{a+1} + grad_s U_a.
  GField gradient_piece(int a) const {
    GField g = grad_f(field(a + 1));
    const GField s = grad_s(field(a));
    for (int e = 0; e < 4; ++e) g[e] += s[e];
    return g;
  }

  /// eps^m part of the nonlinear flux, jets capped at jet_cap.
  GField nonlinear_flux(int m, int jet_cap) const {
    GField P{SField(space_), SField(space_), SField(space_), SField(space_)};
    if (m < 2) return P;
    std::map<int, GField> G;
    for (int a = 1; a <= m - 1; ++a) G[a] = gradient_piece(a);
    auto add = [&](const GField& src, double mult) {
      for (int e = 0; e < 4; ++e)
        if (!src[e].zero()) P[e].axpy(mult, src[e]);
    };
    for (int a = 1; 2 * a <= m; ++a) {
      const int b = m - a;
      add(quadratic(G[a], G[b], a == b, jet_cap), a == b ? 1.0 : 2.0);
    }
    for (int a = 1; 3 * a <= m; ++a)
      for (int b = a; a + 2 * b <= m; ++b) {
        const int c = m - a - b;
        if (c < b) continue;
        const double mult = (a == b && b == c) ? 1.0 : (a == b || b == c) ? 3.0 : 6.0;
        // Order the arguments so that equal pieces come first (symmetric pass).
        if (b == c && a != b) {
          add(cubic(G[b], G[c], G[a], true, jet_cap), mult);
        } else {
          add(cubic(G[a], G[b], G[c], a == b, jet_cap), mult);
        }
      }
    for (auto& f : P) f.prune(space_.prune_rel);
    return P;
  }

  /// Q(g, h); when g and h are the same piece only the products a <= b
  /// are formed.
  GField quadratic(const GField& g, const GField& h, bool same, int jet_cap) const {
    GField out{SField(), SField(), SField(), SField()};
    for (int a = 0; a < 4; ++a)
      for (int b = same ? a : 0; b < 4; ++b) {
        const double w = (same && a != b) ? 2.0 : 1.0;
        bool any = false;
        for (int e = 0; e < 4; ++e) any = any || flux_.Q[e][a][b] != 0.0;
        if (!any || g[a].zero() || h[b].zero()) continue;
        const SField p = field_ops::mul(space_, g[a], h[b], jet_cap);
        for (int e = 0; e < 4; ++e)
          if (flux_.Q[e][a][b] != 0.0) out[e].axpy(w * flux_.Q[e][a][b], p);
      }
    return out;
  }

  /// C(g, h, k); when g and h are the same piece the first-stage products
  /// are formed for a <= b only.
  GField cubic(const GField& g, const GField& h, const GField& k, bool same, int jet_cap) const {
    std::array<std::array<SField, 4>, 4> W;
    for (int a = 0; a < 4; ++a)
      for (int b = same ? a : 0; b < 4; ++b) {
        const double w = (same && a != b) ? 2.0 : 1.0;
        bool any = false;
        for (int e = 0; e < 4; ++e)
          for (int c = 0; c < 4; ++c) any = any || flux_.C[e][a][b][c] != 0.0;
        if (!any || g[a].zero() || h[b].zero()) continue;
        const SField p = field_ops::mul(space_, g[a], h[b], jet_cap);
        for (int e = 0; e < 4; ++e)
          for (int c = 0; c < 4; ++c)
            if (flux_.C[e][a][b][c] != 0.0) W[e][c].axpy(w * flux_.C[e][a][b][c], p);
      }
    GField out{SField(), SField(), SField(), SField()};
    for (int e = 0; e < 4; ++e)
      for (int c = 0; c < 4; ++c)
        if (!W[e][c].zero() && !k[c].zero()) out[e] += field_ops::mul(space_, W[e][c], k[c], jet_cap);
    return out;
  }

  VField L_fs(const VField& U, const VField& Ut) const {
    using namespace field_ops;
    const double r = cfg_.r, c = d_.c;
    const SField ut = d_theta(U[0]), vt = d_theta(U[1]);
    const SField uY = d_Y(U[0]), vY = d_Y(U[1]);
    VField out;
    out[0] = (-2.0 * c) * d_theta(Ut[0]) + (-2.0 * r) * d_x(space_, ut) +
             cd(-(r - 1.0)) * (d_x(space_, vY) + d_y(space_, vt)) + cd(-2.0) * d_y(space_, uY);
    out[1] = (-2.0 * c) * d_theta(Ut[1]) + cd(-2.0) * d_x(space_, vt) +
             cd(-(r - 1.0)) * (d_x(space_, uY) + d_y(space_, ut)) + (-2.0 * r) * d_y(space_, vY);
    return out;
  }

  VField L_ss(const VField& U, const VField& Utt) const {
    using namespace field_ops;
    const double r = cfg_.r;
    const SField uxx = d_x(space_, d_x(space_, U[0])), vxx = d_x(space_, d_x(space_, U[1]));
    const SField uyy = d_y(space_, d_y(space_, U[0])), vyy = d_y(space_, d_y(space_, U[1]));
    const SField uxy = d_x(space_, d_y(space_, U[0])), vxy = d_x(space_, d_y(space_, U[1]));
    VField out;
    out[0] = Utt[0] + cd(-r) * uxx + cd(-(r - 1.0)) * vxy - uyy;
    out[1] = Utt[1] - vxx + cd(-(r - 1.0)) * uxy + cd(-r) * vyy;
    return out;
  }

  VField div_f(const GField& P) const {
    using namespace field_ops;
    return {d_theta(P[0]) + d_Y(P[1]), d_theta(P[2]) + d_Y(P[3])};
  }
  VField div_s(const GField& P) const {
    using namespace field_ops;
    return {d_x(space_, P[0]) + d_y(space_, P[1]), d_x(space_, P[2]) + d_y(space_, P[3])};
  }

  /// Trace at y = 0, Y = 0 of mode n (mode 0 includes the mean).
  SlowArray trace(const SField& f, int n) const {
    SlowArray out = space_.zeros();
    if (f.njets() == 0) return out;
    const Jet& J = f.jet(0);
    if (n == 0 && J.has_mean()) out += J.mean;
    if (!J.fast[n].empty()) out += J.fast[n].value_at_zero();
    return out;
  }

  /// Interior right side H_m (jets capped at order - m).
  VField interior_rhs(int m, const GField& Pm, const GField& Pm1) const {
    const int cap = std::max(0, cfg_.order - m) + 1;
    VField Um = field(m), Umt = field_t(m);
    VField Um1 = field(m - 1), Um1t = field_t(m - 1);
    VField Um1tt{field_ops::d_t(space_, Um1t[0]), field_ops::d_t(space_, Um1t[1])};
    const VField a = L_fs(Um, Umt), b = L_ss(Um1, Um1tt), df = div_f(Pm), ds = div_s(Pm1);
    VField H;
    for (int c = 0; c < 2; ++c) {
      H[c] = SField(space_);
      H[c] -= a[c];
      H[c] -= b[c];
      H[c] += df[c];
      H[c] += ds[c];
      H[c].truncate(cap);
      H[c].prune(space_.prune_rel);
    }
    return H;
  }

  /// Boundary right side h_m, modes 0..ntheta.
  std::vector<Trace> boundary_rhs(int m, const GField& Pm) const {
    using namespace field_ops;
    const double r = cfg_.r;
    const VField U = field(m);
    const SField a = d_x(space_, U[1]) + d_y(space_, U[0]);
    const SField b = cd(r - 2.0) * d_x(space_, U[0]) + cd(r) * d_y(space_, U[1]);
    std::vector<Trace> h(cfg_.ntheta + 1);
    for (int n = 0; n <= cfg_.ntheta; ++n) {
      h[n][0] = -trace(a, n) - trace(Pm[1], n);
      h[n][1] = -trace(b, n) - trace(Pm[3], n);
      if (m == 2) {
        h[n][0] -= forcing_.modes[n][0];
        h[n][1] -= forcing_.modes[n][1];
      }
    }
    return h;
  }

  /// Modified interior data H'_m: fast part of H_m plus the mixed jets
  /// y^j H_{m-j} rewritten as eps^j Y^j.
  std::vector<Vec2EP> modified_rhs(int m) const {
    std::vector<Vec2EP> F(cfg_.ntheta + 1);
    for (int j = 0; j <= m; ++j) {
      auto it = H_.find(m - j);
      if (it == H_.end()) continue;
      for (int c = 0; c < 2; ++c) {
        const SField& f = it->second[c];
        if (f.njets() <= j) continue;
        for (int n = 0; n <= cfg_.ntheta; ++n) {
          const ExpPolyA& e = f.fast(j, n);
          if (e.empty()) continue;
          F[n][c] += field_ops::times_Y_power(e, j);
        }
      }
    }
    for (auto& v : F)
      for (auto& e : v) e.normalize();
    return F;
  }

  /// Cokernel pairings (solvability defect of order m + 1), modes 0..ntheta,
  /// built from the current profiles. Does not modify stored data.
  std::vector<SlowArray> pairing_at(int m) {
    const GField Pm = nonlinear_flux(m, std::max(0, cfg_.order - m));
    auto itP = P_.find(m - 1);
    const GField Pm1 = itP != P_.end() ? itP->second : nonlinear_flux(m - 1, std::max(0, cfg_.order - m + 1));
    auto saved = H_.find(m) != H_.end() ? std::optional<VField>(H_.at(m)) : std::nullopt;
    H_[m] = interior_rhs(m, Pm, Pm1);
    const auto F = modified_rhs(m);
    const auto h = boundary_rhs(m, Pm);
    if (saved) {
      H_[m] = *saved;
    } else {
      H_.erase(m);
    }
    std::vector<SlowArray> out(cfg_.ntheta + 1, space_.zeros());
    for (int n = 1; n <= cfg_.ntheta; ++n) {
      const Vec2EP Up = fast_.solve_particular(F[n], n);
      const Trace lf = fast_.trace_lf(space_.grid, Up, n);
      out[n] = fast_.pairing(Trace{h[n][0] - lf[0], h[n][1] - lf[1]});
    }
    return out;
  }

  const VField& interior(int m) const { return H_.at(m); }
  const std::vector<Trace>& boundary(int m) const { return h_.at(m); }

  /// Sup of a profile's stored data (amplitude, fast, mean jets).
  double profile_max(const Profile& p) const {
    double m = 0.0;
    const VField U = assemble(p, false);
    for (const auto& f : U) m = std::max(m, f.max_abs());
    return m;
  }

  // -------------------------------------------------------------------------
  // Serialization
  // -------------------------------------------------------------------------

  void save(const std::string& path) const {
    Container cont;
    cont.kind = "profile_cascade";
    cont.meta["r"] = cfg_.r;
    cont.meta["order"] = cfg_.order;
    cont.meta["ntheta"] = cfg_.ntheta;
    cont.meta["nt"] = cfg_.grid.nt;
    cont.meta["nx"] = cfg_.grid.nx;
    cont.meta["T"] = cfg_.grid.T;
    cont.meta["Lx"] = cfg_.grid.Lx;
    cont.meta["c"] = d_.c;
    nlohmann::json profs = nlohmann::json::array();
    const std::size_t S = std::size_t(space_.grid.size());
    for (const auto& [k, p] : U_) {
      nlohmann::json pj;
      pj["k"] = k;
      nlohmann::json terms = nlohmann::json::array();
      for (int c = 0; c < 2; ++c)
        for (int n = 0; n <= cfg_.ntheta; ++n) {
          const ExpPolyA& e = p.base[c].fast(0, n);
          int idx = 0;
          for (const auto& t : e.terms()) {
            const std::string name = "U" + std::to_string(k) + "_c" + std::to_string(c) + "_n" +
                                     std::to_string(n) + "_t" + std::to_string(idx++);
            std::vector<cd> buf;
            for (const auto& a : t.c) buf.insert(buf.end(), a.data(), a.data() + a.size());
            cont.put_complex(name, {std::int64_t(t.c.size()), std::int64_t(S)}, buf.data(), buf.size());
            terms.push_back({{"name", name}, {"c", c}, {"n", n}, {"lambda", {t.lambda.real(), t.lambda.imag()}}});
          }
        }
      pj["terms"] = terms;
      for (int n = 1; n <= cfg_.ntheta; ++n) {
        if (p.alpha[n].size() == 0) continue;
        cont.put_complex("alpha" + std::to_string(k) + "_n" + std::to_string(n), {std::int64_t(S)},
                         p.alpha[n].data(), S);
        cont.put_complex("alpha_t" + std::to_string(k) + "_n" + std::to_string(n), {std::int64_t(S)},
                         p.alpha_t[n].data(), S);
      }
      pj["mean_zero"] = p.mean.zero;
      if (!p.mean.zero) {
        pj["mean_jets"] = int(p.mean.jets.size());
        pj["mean_rows"] = p.mean.rows;
        pj["mean_hy"] = p.mean.hy;
        for (std::size_t j = 0; j < p.mean.jets.size(); ++j)
          for (int c = 0; c < 2; ++c)
            cont.put_complex("mean" + std::to_string(k) + "_j" + std::to_string(j) + "_c" + std::to_string(c),
                             {std::int64_t(S)}, p.mean.jets[j][c].data(), S);
        std::vector<double> gu, gv;
        for (std::size_t i = 0; i < p.mean.u.size(); ++i) {
          gu.insert(gu.end(), p.mean.u[i].data(), p.mean.u[i].data() + p.mean.u[i].size());
          gv.insert(gv.end(), p.mean.v[i].data(), p.mean.v[i].data() + p.mean.v[i].size());
        }
        const std::vector<std::int64_t> shape{std::int64_t(p.mean.u.size()), p.mean.rows, space_.grid.nx};
        cont.put_real("mean" + std::to_string(k) + "_u", shape, gu.data(), gu.size());
        cont.put_real("mean" + std::to_string(k) + "_v", shape, gv.data(), gv.size());
      }
      profs.push_back(pj);
    }
    cont.meta["profiles"] = profs;
    cont.write(path);
  }

  static Cascade load(const std::string& path) {
    const Container cont = Container::read(path);
    if (cont.kind != "profile_cascade") throw ConfigError("not a profile cascade: " + path);
    CascadeConfig cfg;
    cfg.r = cont.meta.at("r").get<double>();
    cfg.order = cont.meta.at("order").get<int>();
    cfg.ntheta = cont.meta.at("ntheta").get<int>();
    cfg.grid = SlowGrid{cont.meta.at("nt").get<int>(), cont.meta.at("nx").get<int>(),
                        cont.meta.at("T").get<double>(), cont.meta.at("Lx").get<double>()};
    Cascade cas(cfg, BoundaryForcing{});
    const std::size_t S = std::size_t(cfg.grid.size());
    auto slow = [&](const std::string& name) {
      const auto v = cont.get_complex(name);
      return SlowArray(Eigen::Map<const SlowArray>(v.data(), Eigen::Index(S)));
    };
    for (const auto& pj : cont.meta.at("profiles")) {
      const int k = pj.at("k").get<int>();
      Profile p = cas.empty_profile(k);
      for (const auto& tj : pj.at("terms")) {
        const auto v = cont.get_complex(tj.at("name").get<std::string>());
        const std::size_t deg = v.size() / S;
        ExpPolyA::Term t{cd(tj.at("lambda")[0].get<double>(), tj.at("lambda")[1].get<double>()), {}};
        for (std::size_t q = 0; q < deg; ++q)
          t.c.push_back(Eigen::Map<const SlowArray>(v.data() + q * S, Eigen::Index(S)));
        p.base[tj.at("c").get<int>()].fast(0, tj.at("n").get<int>()).push_term(std::move(t));
      }
      for (int n = 1; n <= cfg.ntheta; ++n) {
        const std::string nm = "alpha" + std::to_string(k) + "_n" + std::to_string(n);
        if (cont.arrays.count(nm) == 0) continue;
        p.alpha[n] = slow(nm);
        p.alpha_t[n] = slow("alpha_t" + std::to_string(k) + "_n" + std::to_string(n));
      }
      p.mean.zero = pj.at("mean_zero").get<bool>();
      if (!p.mean.zero) {
        const int nj = pj.at("mean_jets").get<int>();
        p.mean.rows = pj.at("mean_rows").get<int>();
        p.mean.hy = pj.at("mean_hy").get<double>();
        for (int j = 0; j < nj; ++j) {
          Trace tr;
          for (int c = 0; c < 2; ++c)
            tr[c] = slow("mean" + std::to_string(k) + "_j" + std::to_string(j) + "_c" + std::to_string(c));
          p.mean.jets.push_back(tr);
        }
        const auto& au = cont.get("mean" + std::to_string(k) + "_u");
        const auto& av = cont.get("mean" + std::to_string(k) + "_v");
        const int nt = int(au.shape[0]), rows = int(au.shape[1]), nx = int(au.shape[2]);
        for (int i = 0; i < nt; ++i) {
          p.mean.u.push_back(Eigen::Map<const Eigen::ArrayXXd>(au.data.data() + std::size_t(i) * rows * nx, rows, nx));
          p.mean.v.push_back(Eigen::Map<const Eigen::ArrayXXd>(av.data.data() + std::size_t(i) * rows * nx, rows, nx));
        }
      }
      cas.U_[k] = std::move(p);
    }
    return cas;
  }

 private:
  CascadeConfig cfg_;
  FieldSpace space_;
  RayleighData d_;
  FluxDecomposition flux_;
  FastSolver fast_;
  BoundaryForcing forcing_;
  AmplitudeCoefficients coef_;
  std::map<int, Profile> U_;
  std::map<int, VField> H_;
  std::map<int, std::vector<Trace>> h_;
  std::map<int, GField> P_;
  std::vector<OrderReport> reports_;
  double pair_scale_ = 0.0;  ///< cokernel-pairing scale of the latest fast solve

  static double rel(double num, double den) { return den > 0.0 ? num / den : num; }

  /// Data of order k - 1 (H_{k-1}, h_{k-1}), computing them for k = 2.
  void ensure_order_data(int m) {
    if (H_.count(m)) return;
    const GField Pm = nonlinear_flux(m, std::max(0, cfg_.order - m));
    const GField Pm1 = nonlinear_flux(m - 1, std::max(0, cfg_.order - m + 1));
    P_[m] = Pm;
    H_[m] = interior_rhs(m, Pm, Pm1);
    h_[m] = boundary_rhs(m, Pm);
  }

  /// Fast part of U_k from H'_{k-1}, h_{k-1}; solvability checks (a)-(c).
  void solve_fast(int k, OrderReport& rep) {
    ensure_order_data(k - 1);
    const auto F = modified_rhs(k - 1);
    const auto& h = h_.at(k - 1);
    Profile p = empty_profile(k);
    // (a): the mean part of H_{k-1} (on the jets that are fully resolved).
    {
      const VField& H = H_.at(k - 1);
      double mean = 0.0, scale = 0.0;
      for (const auto& f : H) {
        scale = std::max(scale, f.max_abs());
        for (int j = 0; j < std::min(f.njets(), 1 + std::max(0, cfg_.order - k)); ++j)
          if (f.jet(j).has_mean()) mean = std::max(mean, f.jet(j).mean.abs().maxCoeff());
      }
      rep.cond_a = rel(mean, scale);
    }
    // Mode 0.
    const Vec2EP U0 = fast_.solve_zero_mode(F[0]);
    {
      double num = 0.0, den = 0.0;
      for (int c = 0; c < 2; ++c) {
        const SlowArray I = F[0][c].empty() ? space_.zeros() : SlowArray(F[0][c].integral_zero_inf());
        num = std::max(num, (I - h[0][c]).abs().maxCoeff());
        den = std::max({den, I.abs().maxCoeff(), h[0][c].abs().maxCoeff()});
      }
      rep.cond_b = rel(num, den);
    }
    p.base[0].fast(0, 0) = U0[0];
    p.base[1].fast(0, 0) = U0[1];
    double int_num = 0.0, int_den = 0.0, bnd_num = 0.0, bnd_den = 0.0, c_num = 0.0, c_den = 0.0;
    auto track = [](double& num, double& den, const ExpPolyA& res, const ExpPolyA& ref) {
      num = std::max(num, res.max_abs());
      den = std::max(den, ref.max_abs());
    };
    {
      const Vec2EP L0 = fast_.apply_Lff(U0, 0);
      for (int c = 0; c < 2; ++c) track(int_num, int_den, (L0[c] - F[0][c]).normalize(), F[0][c]);
    }
    for (int n = 1; n <= cfg_.ntheta; ++n) {
      const Vec2EP Up = fast_.solve_particular(F[n], n);
      const Trace lf = fast_.trace_lf(space_.grid, Up, n);
      const Trace rhs{h[n][0] - lf[0], h[n][1] - lf[1]};
      const SlowArray pr = fast_.pairing(rhs);
      c_num = std::max(c_num, pr.abs().maxCoeff());
      c_den = std::max({c_den, h[n][0].abs().maxCoeff(), h[n][1].abs().maxCoeff(),
                        lf[0].abs().maxCoeff(), lf[1].abs().maxCoeff()});
      const Vec2EP Uh = fast_.solve_homogeneous(rhs, n);
      Vec2EP U{Up[0] + Uh[0], Up[1] + Uh[1]};
      U[0].normalize();
      U[1].normalize();
      // Exactness checks of the mode solve.
      const Vec2EP L = fast_.apply_Lff(U, n);
      for (int c = 0; c < 2; ++c) track(int_num, int_den, (L[c] - F[n][c]).normalize(), F[n][c]);
      const Trace lU = fast_.trace_lf(space_.grid, U, n);
      // The image part of rhs is matched exactly; a cokernel part (the
      // solvability defect reported as (c)) remains in this residual.
      for (int c = 0; c < 2; ++c) {
        const SlowArray defect = lU[c] - h[n][c];
        bnd_num = std::max(bnd_num, defect.abs().maxCoeff());
        bnd_den = std::max(bnd_den, h[n][c].abs().maxCoeff());
      }
      p.base[0].fast(0, n) = std::move(U[0]);
      p.base[1].fast(0, n) = std::move(U[1]);
    }
    rep.interior_residual = rel(int_num, int_den);
    rep.boundary_residual = rel(bnd_num, bnd_den);
    rep.cond_c = rel(c_num, std::abs(d_.coker_vec.norm()) * c_den);
    pair_scale_ = std::abs(d_.coker_vec.norm()) * c_den;
    if (cfg_.enforce_solvability) check_solvability(rep, cfg_.solvability_tol);
    U_[k] = std::move(p);
  }

  /// Fix alpha_k from the pairing of order k + 1.
  void solve_amplitude(int k, OrderReport& rep) {
    const int N = cfg_.ntheta;
    const SlowGrid& g = space_.grid;
    const auto P0 = pairing_at(k);
    std::vector<SlowArray> G(N + 1, g.zeros());
    double pn = 0.0;
    for (int n = 1; n <= N; ++n) {
      G[n] = -P0[n] / coef_.a_t[n];
      pn = std::max(pn, P0[n].abs().maxCoeff());
    }
    rep.negative_control = rel(pn, pair_scale_);
    AmplitudeGrid ag{g.Lx, g.nx, N};
    AmplitudeSolver solver(ag, d_.c, coef_.M, cfg_.amplitude);
    const CubicSplineWeights spline(g.nt, 0.0, g.dt());
    AmplitudeForcing Gf = [&](double t, Eigen::MatrixXcd& out) {
      const Eigen::VectorXd w = spline.weights(t);
      for (int n = 1; n <= N; ++n) {
        Eigen::Map<const Eigen::MatrixXcd> A(G[n].data(), g.nx, g.nt);
        out.col(n) = A * w.cast<cd>();
      }
    };
    std::vector<double> rec;
    for (int i = 1; i < g.nt; ++i) rec.push_back(g.t(i));
    AmplitudeHistory hist = k == 2 ? solver.run(Gf, rec)
                                   : solver.solve_linearized(U_.at(2).history, Gf, rec, cfg_.linearized_dt_max);
    Profile& p = U_.at(k);
    p.history = hist;
    for (int n = 1; n <= N; ++n) {
      p.alpha[n] = g.zeros();
      p.alpha_t[n] = g.zeros();
    }
    for (std::size_t i = 0; i < hist.size(); ++i) {
      const Eigen::MatrixXcd a = solver.ops().to_phys(hist[i].a_hat);
      const Eigen::MatrixXcd at = solver.ops().to_phys(hist[i].at_hat);
      for (int n = 1; n <= N; ++n)
        for (int j = 0; j < g.nx; ++j) {
          p.alpha[n](g.idx(int(i) + 1, j)) = a(j, n);
          p.alpha_t[n](g.idx(int(i) + 1, j)) = at(j, n);
        }
    }
    for (int n = 1; n <= N; ++n) rep.alpha_max = std::max(rep.alpha_max, p.alpha[n].abs().maxCoeff());
    // Modes removed by the dealiasing (or at round-off level) are dropped.
    for (int n = 1; n <= N; ++n) {
      if (n > ag.n_keep() || p.alpha[n].abs().maxCoeff() <= cfg_.prune_rel * rep.alpha_max) {
        p.alpha[n] = SlowArray();
        p.alpha_t[n] = SlowArray();
      }
    }
  }

  /// Final H_k, h_k with alpha_k, then the mean part Ubar_k.
  void finalize_order(int k, OrderReport& rep) {
    const GField Pk = nonlinear_flux(k, std::max(0, cfg_.order - k));
    P_[k] = Pk;
    H_[k] = interior_rhs(k, Pk, P_.at(k - 1));
    h_[k] = boundary_rhs(k, Pk);
    // b_k = h_k^0 (without Ubar_k) - int_0^inf H'_k^0 dY.
    const auto F = modified_rhs(k);
    Trace b;
    for (int c = 0; c < 2; ++c) {
      b[c] = h_[k][0][c];
      if (!F[0][c].empty()) b[c] -= F[0][c].integral_zero_inf();
    }
    rep.mean_boundary = std::max(b[0].abs().maxCoeff(), b[1].abs().maxCoeff());
    Profile& p = U_.at(k);
    if (rep.mean_boundary <= cfg_.mean.skip_tol) {
      p.mean.zero = true;
      return;
    }
    p.mean = solve_mean(b);
    rep.mean_solved = true;
    // l_s Ubar_k = b_k exactly (through jet 1): update h_k^0.
    h_[k][0][0] -= b[0];
    h_[k][0][1] -= b[1];
  }

 public:
  /// Linear mean problem L_ss Ubar = 0 in y > 0, l_s Ubar = b on y = 0,
  /// solved with the FD solver (traction -b) and reduced to jets at y = 0.
  MeanProfile solve_mean(const Trace& b) const {
    const SlowGrid& g = space_.grid;
    const MeanSolveConfig& mc = cfg_.mean;
    MeanProfile out;
    out.zero = false;
    out.boundary = b;
    FdGrid fg;
    fg.nx = g.nx * mc.nx_factor;
    fg.Lx = g.Lx;
    fg.hy = fg.hx();
    fg.ny = int(std::ceil(mc.y_max / fg.hy)) + 1;
    Eigen::MatrixXd Tx(fg.nx, g.nx);
    for (int i = 0; i < fg.nx; ++i) Tx.row(i) = trig_weights(g.nx, g.Lx, fg.x(i)).transpose();
    const CubicSplineWeights spline(g.nt, 0.0, g.dt());
    Eigen::Map<const Eigen::MatrixXcd> Bu(b[0].data(), g.nx, g.nt), Bv(b[1].data(), g.nx, g.nt);
    FdConfig fc;
    fc.mode = FdMode::linearized;
    fc.cfl = mc.cfl;
    fc.sponge_width = mc.sponge_width;
    fc.sponge_strength = mc.sponge_strength;
    fc.traction = [&](double t, std::vector<double>& tx, std::vector<double>& ty) {
      const Eigen::VectorXd w = spline.weights(t);
      const Eigen::VectorXd ru = (Bu * w.cast<cd>()).real(), rv = (Bv * w.cast<cd>()).real();
      const Eigen::VectorXd fu = Tx * ru, fv = Tx * rv;
      for (int i = 0; i < fg.nx; ++i) {
        tx[i] = -fu(i);
        ty[i] = -fv(i);
      }
    };
    FdSolver solver(fg, ElasticMedium::from_ratio(cfg_.r), fc);
    const int m = std::max(1, int(std::ceil(g.dt() / solver.dt() - 1e-9)));
    solver.set_dt(g.dt() / m);
    out.fd_dt = g.dt() / m;
    out.fd_nx = fg.nx;
    out.fd_ny = fg.ny;
    out.hy = fg.hy;
    out.rows = std::min(fg.ny, int(std::floor(mc.y_store / fg.hy)) + 1);
    auto snapshot = [&]() {
      Eigen::ArrayXXd u(out.rows, g.nx), v(out.rows, g.nx);
      const FdField& s = solver.state();
      for (int j = 0; j < out.rows; ++j)
        for (int i = 0; i < g.nx; ++i) {
          u(j, i) = s.U(0, j, i * mc.nx_factor);
          v(j, i) = s.U(1, j, i * mc.nx_factor);
        }
      out.u.push_back(u);
      out.v.push_back(v);
    };
    snapshot();
    for (int i = 1; i < g.nt; ++i) {
      for (int s = 0; s < m; ++s) solver.step();
      snapshot();
    }
    // Jets: jet 0 is the computed trace; jet 1 from the boundary condition;
    // higher jets from L_ss Ubar = 0 (Cauchy-Kovalevskaya recursion).
    const int nj = cfg_.order + 2;
    const double r = cfg_.r;
    out.jets.assign(nj, Trace{g.zeros(), g.zeros()});
    for (int i = 0; i < g.nt; ++i)
      for (int j = 0; j < g.nx; ++j) {
        out.jets[0][0](g.idx(i, j)) = out.u[i](0, j);
        out.jets[0][1](g.idx(i, j)) = out.v[i](0, j);
      }
    {
      const SlowArray ux = slow_dx(g, out.jets[0][0]), vx = slow_dx(g, out.jets[0][1]);
      out.jets[1][0] = b[0] - vx;
      out.jets[1][1] = (b[1] - (r - 2.0) * ux) / r;
    }
    for (int j = 0; j + 2 < nj; ++j) {
      const Trace& a = out.jets[j];
      const Trace& a1 = out.jets[j + 1];
      const double f = 1.0 / ((j + 2.0) * (j + 1.0));
      const SlowArray utt = slow_dt(g, slow_dt(g, a[0])), vtt = slow_dt(g, slow_dt(g, a[1]));
      const SlowArray uxx = slow_dx(g, slow_dx(g, a[0])), vxx = slow_dx(g, slow_dx(g, a[1]));
      const SlowArray u1x = slow_dx(g, a1[0]), v1x = slow_dx(g, a1[1]);
      out.jets[j + 2][0] = f * (utt - r * uxx - (r - 1.0) * (j + 1.0) * v1x);
      out.jets[j + 2][1] = f * (vtt - vxx - (r - 1.0) * (j + 1.0) * u1x) / r;
    }
    return out;
  }
};

}  // namespace rwave
