#pragma once

/// @file amplitude.hpp
/// @brief Pseudospectral solver for the nonlocal Burgers-type amplitude
/// equation
///     d_t alpha + c d_x alpha + H(B(alpha, alpha)) = G
/// and its linearization about a given alpha_2,
///     d_t alpha_k + c d_x alpha_k + 2 H(B(alpha_2, alpha_k)) = G_k,
/// on a periodic x box and periodic theta, plus the property monitors (tame
/// ratio, cancellation ratio).
///
/// Representation: alpha(x, theta) = sum_n a(x, n) e^{i n theta}, real, so only
/// n >= 0 is stored. The spectral state a_hat(m, n) holds x-Fourier
/// coefficients, a(x_j, n) = sum_m a_hat(m, n) e^{i xi_m x_j}, rows in FFT
/// order. The quadratic term is applied through a multiplier table
///     N(a, b)(n) = sum_{n1} M(n; n1, n - n1) a(n1) b(n - n1),
/// which for a kernel b and constant c0 is
///     M(n; n1, n2) = (-i sgn n) * (-1 / (4 pi c0)) * b(-n, n1, n2),
/// i.e. the Hilbert transform is folded into the table.

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

#include "rwave/container.hpp"
#include "rwave/errors.hpp"

namespace rwave {

using cd = std::complex<double>;

/// Trilinear kernel b(n1, n2, n3) with normalisation constant c0.
struct Kernel {
  std::function<double(int, int, int)> eval;
  double c0 = 1.0;
  double bound_C = 0.0;  ///< reported constant in |b| <= C min pairwise |n_i n_j|
  std::string name;

  /// b = kappa n1 n2 n3 / max(|n1|, |n2|, |n3|); zero if any argument is 0.
  static Kernel reference(double kappa = 1.0, double c0 = 1.0) {
    Kernel k;
    k.c0 = c0;
    k.bound_C = std::abs(kappa);
    k.name = "reference";
    k.eval = [kappa](int n1, int n2, int n3) {
      if (n1 == 0 || n2 == 0 || n3 == 0) return 0.0;
      const int m = std::max({std::abs(n1), std::abs(n2), std::abs(n3)});
      return kappa * double(n1) * double(n2) * double(n3) / double(m);
    };
    return k;
  }
  static Kernel zero() {
    Kernel k;
    k.name = "zero";
    k.eval = [](int, int, int) { return 0.0; };
    return k;
  }
};

struct AmplitudeGrid {
  double Lx = 40.0;
  int nx = 128;
  int ntheta = 16;  ///< stored theta modes 0..ntheta

  /// Largest retained theta mode under the 2/3 rule.
  int n_keep() const { return (2 * ntheta) / 3; }
  /// Largest retained |x-mode index| under the 2/3 rule.
  int m_keep() const { return nx / 3; }
  double xi(int m) const {
    const int mm = (m < nx / 2) ? m : m - nx;
    return 2.0 * std::numbers::pi * mm / Lx;
  }
  int mode_index(int m) const { return (m < nx / 2) ? m : m - nx; }
  double x(int j) const { return j * Lx / nx; }
};

/// Quadratic multiplier table over n = 0..N (rows) and n1 = -N..N (cols).
struct Multiplier {
  int ntheta = 0;
  Eigen::MatrixXcd M;  // (N+1) x (2N+1)

  cd operator()(int n, int n1) const { return M(n, n1 + ntheta); }

  static Multiplier zero(int ntheta) {
    Multiplier m;
    m.ntheta = ntheta;
    m.M = Eigen::MatrixXcd::Zero(ntheta + 1, 2 * ntheta + 1);
    return m;
  }
  static Multiplier from_kernel(const Kernel& k, int ntheta) {
    Multiplier m = zero(ntheta);
    const double pref = -1.0 / (4.0 * std::numbers::pi * k.c0);
    for (int n = 1; n <= ntheta; ++n)
      for (int n1 = -ntheta; n1 <= ntheta; ++n1) {
        const int n2 = n - n1;
        if (n1 == 0 || n2 == 0 || std::abs(n2) > ntheta) continue;
        m.M(n, n1 + ntheta) = cd(0.0, -1.0) * pref * k.eval(-n, n1, n2);
      }
    return m;
  }
  /// Largest |M(n; n1, n2)| / |n|: the effective transport speed factor.
  double speed_factor() const {
    double s = 0.0;
    for (int n = 1; n <= ntheta; ++n) s = std::max(s, M.row(n).cwiseAbs().maxCoeff() / n);
    return s;
  }
};

/// Spectral state of one amplitude at one time.
struct SpectralState {
  Eigen::MatrixXcd a_hat;  // nx x (ntheta+1)
  double t = 0.0;
};

/// Transforms and pointwise-in-x theta convolutions.
class AmplitudeOps {
 public:
  explicit AmplitudeOps(const AmplitudeGrid& g) : g_(g) {}

  const AmplitudeGrid& grid() const { return g_; }

  Eigen::MatrixXcd zeros() const { return Eigen::MatrixXcd::Zero(g_.nx, g_.ntheta + 1); }

  Eigen::MatrixXcd to_phys(const Eigen::MatrixXcd& a_hat) const {
    Eigen::MatrixXcd out(g_.nx, g_.ntheta + 1);
    Eigen::VectorXcd col(g_.nx), res(g_.nx);
    for (int n = 0; n <= g_.ntheta; ++n) {
      col = a_hat.col(n);
      fft_.inv(res, col);
      out.col(n) = res * double(g_.nx);
    }
    return out;
  }
  Eigen::MatrixXcd to_spec(const Eigen::MatrixXcd& a) const {
    Eigen::MatrixXcd out(g_.nx, g_.ntheta + 1);
    Eigen::VectorXcd col(g_.nx), res(g_.nx);
    for (int n = 0; n <= g_.ntheta; ++n) {
      col = a.col(n);
      fft_.fwd(res, col);
      out.col(n) = res / double(g_.nx);
    }
    return out;
  }

  /// 2/3-rule truncation in both x-modes and theta-modes; also enforces the
  /// real-field constraint on the theta-mean column.
  void dealias(Eigen::MatrixXcd& a_hat) const {
    const int mk = g_.m_keep(), nk = g_.n_keep();
    for (int m = 0; m < g_.nx; ++m)
      if (std::abs(g_.mode_index(m)) > mk) a_hat.row(m).setZero();
    for (int n = nk + 1; n <= g_.ntheta; ++n) a_hat.col(n).setZero();
  }

  /// Hilbert transform in theta: mode n multiplied by -i sgn(n).
  Eigen::MatrixXcd hilbert(const Eigen::MatrixXcd& a_hat) const {
    Eigen::MatrixXcd out = a_hat * cd(0.0, -1.0);
    out.col(0).setZero();
    return out;
  }

  /// Theta-mode value a(x, n) for any n from the stored n >= 0 half.
  static cd mode(const Eigen::MatrixXcd& a, int j, int n) {
    return n >= 0 ? a(j, n) : std::conj(a(j, -n));
  }

  /// N(a, b)(n) = sum_{n1} M(n; n1, n-n1) a(n1) b(n-n1), per x point
  /// (physical x). Output for n = 0..ntheta.
  Eigen::MatrixXcd convolve_phys(const Multiplier& M, const Eigen::MatrixXcd& a,
                                 const Eigen::MatrixXcd& b) const {
    const int N = g_.ntheta;
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(g_.nx, N + 1);
    for (int j = 0; j < g_.nx; ++j)
      for (int n = 0; n <= N; ++n) {
        cd s = 0.0;
        for (int n1 = std::max(-N, n - N); n1 <= std::min(N, n + N); ++n1) {
          const cd w = M(n, n1);
          if (w == cd(0.0)) continue;
          s += w * mode(a, j, n1) * mode(b, j, n - n1);
        }
        out(j, n) = s;
      }
    return out;
  }

  /// Spectral-in, spectral-out bilinear multiplier term (dealiased).
  Eigen::MatrixXcd apply(const Multiplier& M, const Eigen::MatrixXcd& a_hat,
                         const Eigen::MatrixXcd& b_hat) const {
    Eigen::MatrixXcd out = to_spec(convolve_phys(M, to_phys(a_hat), to_phys(b_hat)));
    dealias(out);
    return out;
  }

  /// Sobolev norm squared over (x, theta): 2 pi Lx sum (1 + xi^2 + n^2)^m |a|^2.
  double hm_norm2(const Eigen::MatrixXcd& a_hat, double m) const {
    double s = 0.0;
    for (int mm = 0; mm < g_.nx; ++mm) {
      const double xi = g_.xi(mm);
      for (int n = -g_.ntheta; n <= g_.ntheta; ++n) {
        const cd v = n >= 0 ? a_hat(mm, n) : std::conj(a_hat((g_.nx - mm) % g_.nx, -n));
        s += std::pow(1.0 + xi * xi + double(n) * double(n), m) * std::norm(v);
      }
    }
    return 2.0 * std::numbers::pi * g_.Lx * s;
  }

  /// Real field value alpha(x_j, theta).
  double field_value(const Eigen::MatrixXcd& a, int j, double theta) const {
    double v = a(j, 0).real();
    for (int n = 1; n <= g_.ntheta; ++n) v += 2.0 * (a(j, n) * std::polar(1.0, n * theta)).real();
    return v;
  }

 private:
  AmplitudeGrid g_;
  mutable Eigen::FFT<double> fft_;
};

/// B(a, b) exactly as the bilinear Fourier multiplier (without the Hilbert
/// transform), by direct summation in theta at every x point.
inline Eigen::MatrixXcd bilinear_B(const AmplitudeOps& ops, const Eigen::MatrixXcd& a_hat,
                                   const Eigen::MatrixXcd& b_hat, const Kernel& k) {
  const int N = ops.grid().ntheta;
  Multiplier m = Multiplier::zero(N);
  const double pref = -1.0 / (4.0 * std::numbers::pi * k.c0);
  for (int n = 0; n <= N; ++n)
    for (int n1 = -N; n1 <= N; ++n1) {
      const int n2 = n - n1;
      if (n1 == 0 || n2 == 0 || std::abs(n2) > N) continue;
      m.M(n, n1 + N) = pref * k.eval(-n, n1, n2);
    }
  return ops.to_spec(ops.convolve_phys(m, ops.to_phys(a_hat), ops.to_phys(b_hat)));
}

struct AmplitudeOptions {
  double cfl = 0.5;            ///< C_cfl of dt <= C_cfl / (max|n| max|alpha| kappa_eff)
  double dt_max = 1e-2;        ///< upper bound independent of the state
  double blowup_ceiling = 1e8; ///< abort when ||alpha||_{H^{m1}} exceeds this
  double m1 = 4.0;             ///< Sobolev index of the blow-up guard
  bool seam_guard = false;     ///< require compact support away from the x seam
  double seam_fraction = 0.05; ///< width (fraction of Lx) of each seam band
  double seam_tol = 1e-8;      ///< max allowed seam mass fraction
};

/// One recorded time level: state and its time derivative (for Hermite
/// interpolation of alpha_2 inside the linearized solve).
struct AmplitudeRecord {
  double t = 0.0;
  Eigen::MatrixXcd a_hat;
  Eigen::MatrixXcd at_hat;
};
using AmplitudeHistory = std::vector<AmplitudeRecord>;

/// Forcing in physical x and theta modes: fill G(j, n), n = 0..ntheta.
using AmplitudeForcing = std::function<void(double t, Eigen::MatrixXcd& G)>;

class AmplitudeSolver {
 public:
  AmplitudeSolver(const AmplitudeGrid& g, double c, Multiplier M, AmplitudeOptions opt = {})
      : ops_(g), c_(c), M_(std::move(M)), opt_(opt) {
    if (M_.ntheta != g.ntheta) throw DomainError("AmplitudeSolver: multiplier size mismatch");
    E_.resize(g.nx);
    for (int m = 0; m < g.nx; ++m) E_(m) = g.xi(m);
  }

  const AmplitudeOps& ops() const { return ops_; }
  const Multiplier& multiplier() const { return M_; }
  double speed() const { return c_; }

  /// Spectral forcing at time t (zero for t <= 0).
  Eigen::MatrixXcd forcing_hat(const AmplitudeForcing& G, double t) const {
    if (t <= 0.0 || !G) return ops_.zeros();
    Eigen::MatrixXcd g = ops_.zeros();
    G(t, g);
    Eigen::MatrixXcd gh = ops_.to_spec(g);
    ops_.dealias(gh);
    return gh;
  }

  /// Right side without the transport term: F(t, a) = -N(a, a) + G(t).
  Eigen::MatrixXcd rhs(const AmplitudeForcing& G, double t, const Eigen::MatrixXcd& a) const {
    return -ops_.apply(M_, a, a) + forcing_hat(G, t);
  }

  /// Full time derivative including transport.
  Eigen::MatrixXcd time_derivative(const AmplitudeForcing& G, double t,
                                   const Eigen::MatrixXcd& a) const {
    return transport(a) + rhs(G, t, a);
  }

  /// One integrating-factor RK4 step (transport removed exactly).
  void step(SpectralState& s, const AmplitudeForcing& G, double dt) const {
    auto F = [&](double t, const Eigen::MatrixXcd& a) { return rhs(G, t, a); };
    s.a_hat = if_rk4(s.a_hat, s.t, dt, F);
    s.t += dt;
    guard(s.a_hat, s.t);
  }

  /// Stable step for the current state.
  double stable_dt(const Eigen::MatrixXcd& a_hat) const {
    const double amax = max_abs_phys(a_hat);
    const double k = M_.speed_factor();
    const int nmax = std::max(1, ops_.grid().n_keep());
    if (amax * k == 0.0) return opt_.dt_max;
    return std::min(opt_.dt_max, opt_.cfl / (nmax * amax * k));
  }

  /// Integrate from a zero state at t = 0, recording at the given times
  /// (increasing, >= 0). Each record interval is split into equal steps.
  AmplitudeHistory run(const AmplitudeForcing& G, const std::vector<double>& record_times) const {
    SpectralState s{ops_.zeros(), 0.0};
    AmplitudeHistory hist;
    for (double tr : record_times) {
      while (s.t < tr - 1e-14) {
        const double remaining = tr - s.t;
        const int nsteps = int(std::ceil(remaining / stable_dt(s.a_hat) - 1e-12));
        const double dt = remaining / std::max(1, nsteps);
        step(s, G, dt);
      }
      s.t = tr;
      hist.push_back({tr, s.a_hat, time_derivative(G, tr, s.a_hat)});
    }
    return hist;
  }

  /// Linearized solve about a recorded alpha_2 history; forcing G_k.
  /// alpha_2 between records is Hermite-cubic interpolated (O(dt^4)).
  AmplitudeHistory solve_linearized(const AmplitudeHistory& alpha2, const AmplitudeForcing& Gk,
                                    const std::vector<double>& record_times,
                                    double dt_max) const {
    SpectralState s{ops_.zeros(), 0.0};
    AmplitudeHistory hist;
    auto F = [&](double t, const Eigen::MatrixXcd& a) -> Eigen::MatrixXcd {
      const Eigen::MatrixXcd a2 = hermite(alpha2, t);
      return -2.0 * ops_.apply(M_, a2, a) + forcing_hat(Gk, t);
    };
    for (double tr : record_times) {
      while (s.t < tr - 1e-14) {
        const double remaining = tr - s.t;
        const int nsteps = int(std::ceil(remaining / dt_max - 1e-12));
        const double dt = remaining / std::max(1, nsteps);
        s.a_hat = if_rk4(s.a_hat, s.t, dt, F);
        s.t += dt;
        guard(s.a_hat, s.t);
      }
      s.t = tr;
      hist.push_back({tr, s.a_hat, transport(s.a_hat) + F(tr, s.a_hat)});
    }
    return hist;
  }

  /// Hermite-cubic interpolation of a recorded history (zero before the
  /// first record if it starts after t = 0 with zero state).
  Eigen::MatrixXcd hermite(const AmplitudeHistory& h, double t) const {
    if (h.empty() || t <= 0.0) return ops_.zeros();
    if (t <= h.front().t) {
      // Between 0 (zero state, zero derivative) and the first record.
      AmplitudeRecord z{0.0, ops_.zeros(), ops_.zeros()};
      return hermite_between(z, h.front(), t);
    }
    auto it = std::upper_bound(h.begin(), h.end(), t,
                               [](double v, const AmplitudeRecord& r) { return v < r.t; });
    if (it == h.end()) return h.back().a_hat;
    return hermite_between(*(it - 1), *it, t);
  }

  /// Transport term -c d_x a in spectral space.
  Eigen::MatrixXcd transport(const Eigen::MatrixXcd& a) const {
    Eigen::MatrixXcd out = a;
    for (int m = 0; m < ops_.grid().nx; ++m) out.row(m) *= cd(0.0, -c_ * E_(m));
    return out;
  }

  double max_abs_phys(const Eigen::MatrixXcd& a_hat) const {
    const Eigen::MatrixXcd a = ops_.to_phys(a_hat);
    // |alpha(x, theta)| <= sum_n |a(x, n)|
    double m = 0.0;
    for (int j = 0; j < a.rows(); ++j) {
      double s = std::abs(a(j, 0));
      for (int n = 1; n < a.cols(); ++n) s += 2.0 * std::abs(a(j, n));
      m = std::max(m, s);
    }
    return m;
  }

  /// Fraction of L2 mass within the seam bands near x = 0 and x = Lx.
  double seam_mass_fraction(const Eigen::MatrixXcd& a_hat) const {
    const Eigen::MatrixXcd a = ops_.to_phys(a_hat);
    const auto& g = ops_.grid();
    double seam = 0.0, total = 0.0;
    for (int j = 0; j < g.nx; ++j) {
      double w = std::norm(a(j, 0));
      for (int n = 1; n <= g.ntheta; ++n) w += 2.0 * std::norm(a(j, n));
      total += w;
      const double x = g.x(j);
      if (x < opt_.seam_fraction * g.Lx || x > (1.0 - opt_.seam_fraction) * g.Lx) seam += w;
    }
    return total > 0.0 ? seam / total : 0.0;
  }

 private:
  AmplitudeOps ops_;
  double c_;
  Multiplier M_;
  AmplitudeOptions opt_;
  Eigen::VectorXd E_;  // xi values

  Eigen::MatrixXcd hermite_between(const AmplitudeRecord& r0, const AmplitudeRecord& r1,
                                   double t) const {
    const double h = r1.t - r0.t;
    const double s = (t - r0.t) / h;
    const double h00 = 2 * s * s * s - 3 * s * s + 1, h10 = s * s * s - 2 * s * s + s;
    const double h01 = -2 * s * s * s + 3 * s * s, h11 = s * s * s - s * s;
    return h00 * r0.a_hat + (h10 * h) * r0.at_hat + h01 * r1.a_hat + (h11 * h) * r1.at_hat;
  }

  Eigen::MatrixXcd expo(const Eigen::MatrixXcd& a, double tau) const {
    Eigen::MatrixXcd out = a;
    for (int m = 0; m < ops_.grid().nx; ++m) out.row(m) *= std::polar(1.0, -c_ * E_(m) * tau);
    return out;
  }

  template <class Fn>
  Eigen::MatrixXcd if_rk4(const Eigen::MatrixXcd& a, double t, double dt, Fn&& F) const {
    const Eigen::MatrixXcd k1 = F(t, a);
    const Eigen::MatrixXcd k2 = F(t + 0.5 * dt, expo(a + 0.5 * dt * k1, 0.5 * dt));
    const Eigen::MatrixXcd k3 = F(t + 0.5 * dt, expo(a, 0.5 * dt) + 0.5 * dt * k2);
    const Eigen::MatrixXcd k4 = F(t + dt, expo(a, dt) + dt * expo(k3, 0.5 * dt));
    Eigen::MatrixXcd out = expo(a, dt) + (dt / 6.0) * (expo(k1, dt) + 2.0 * expo(k2 + k3, 0.5 * dt) + k4);
    out.col(0).imag().setZero();  // keep real-field constraint exact
    enforce_hermitian_mean(out);
    return out;
  }

  /// The theta-mean column must satisfy a_hat(-m, 0) = conj a_hat(m, 0).
  void enforce_hermitian_mean(Eigen::MatrixXcd& a) const {
    const int nx = ops_.grid().nx;
    Eigen::VectorXcd c0 = a.col(0);
    for (int m = 0; m < nx; ++m) {
      const int mm = (nx - m) % nx;
      a(m, 0) = 0.5 * (c0(m) + std::conj(c0(mm)));
    }
  }

  void guard(const Eigen::MatrixXcd& a, double t) const {
    if (!a.allFinite()) throw InstabilityError("amplitude: non-finite state at t=" + std::to_string(t));
    const double nrm = std::sqrt(ops_.hm_norm2(a, opt_.m1));
    if (nrm > opt_.blowup_ceiling) {
      throw InstabilityError("amplitude: blow-up guard tripped at t=" + std::to_string(t) +
                             " (H^m1 norm " + std::to_string(nrm) + ")");
    }
    if (opt_.seam_guard) {
      const double f = seam_mass_fraction(a);
      if (f > opt_.seam_tol) {
        throw InstabilityError("amplitude: mass near the periodic seam (" + std::to_string(f) +
                               ") exceeds tolerance");
      }
    }
  }
};

/// |d/dt ||u||^2_{H^m}| / (||u||^2_{H^m} ||u||_{H^{m1}}) per interior record,
/// with centered differences in time. Zero states give ratio 0.
inline std::vector<double> tame_monitor(const AmplitudeOps& ops, const AmplitudeHistory& h,
                                        double m, double m1) {
  std::vector<double> out;
  if (h.size() < 3) return out;
  std::vector<double> n2(h.size()), n1(h.size());
  for (std::size_t i = 0; i < h.size(); ++i) {
    n2[i] = ops.hm_norm2(h[i].a_hat, m);
    n1[i] = std::sqrt(ops.hm_norm2(h[i].a_hat, m1));
  }
  for (std::size_t i = 1; i + 1 < h.size(); ++i) {
    const double d = (n2[i + 1] - n2[i - 1]) / (h[i + 1].t - h[i - 1].t);
    const double den = n2[i] * n1[i];
    out.push_back(den > 0.0 ? std::abs(d) / den : 0.0);
  }
  return out;
}

/// Quadratic form  int int u H(B(u, v)) dx dtheta, by physical quadrature and
/// by the Fourier (Parseval) sum.
struct QuadraticForm {
  double physical = 0.0;
  double fourier = 0.0;
};

inline QuadraticForm quadratic_form(const AmplitudeOps& ops, const Multiplier& HB,
                                    const Eigen::MatrixXcd& u_hat,
                                    const Eigen::MatrixXcd& v_hat) {
  const auto& g = ops.grid();
  const Eigen::MatrixXcd u = ops.to_phys(u_hat);
  const Eigen::MatrixXcd w = ops.convolve_phys(HB, u, ops.to_phys(v_hat));
  const Eigen::MatrixXcd w_hat = ops.to_spec(w);
  QuadraticForm q;
  // Physical: sample theta on 4*ntheta+1 points (exact for the trig products).
  const int nth = 4 * g.ntheta + 2;
  double s = 0.0;
  for (int j = 0; j < g.nx; ++j)
    for (int k = 0; k < nth; ++k) {
      const double th = 2.0 * std::numbers::pi * k / nth;
      s += ops.field_value(u, j, th) * ops.field_value(w, j, th);
    }
  q.physical = s * (g.Lx / g.nx) * (2.0 * std::numbers::pi / nth);
  // Fourier: 2 pi Lx sum_{m,n} conj(u_hat) w_hat over all n.
  double f = 0.0;
  for (int m = 0; m < g.nx; ++m) {
    f += (std::conj(u_hat(m, 0)) * w_hat(m, 0)).real();
    for (int n = 1; n <= g.ntheta; ++n) f += 2.0 * (std::conj(u_hat(m, n)) * w_hat(m, n)).real();
  }
  q.fourier = 2.0 * std::numbers::pi * g.Lx * f;
  return q;
}

/// |int u H(B(u, v))| / (||v||_{H^{m1}} ||u||^2_{L^2}).
inline double cancellation_ratio(const AmplitudeOps& ops, const Multiplier& HB,
                                 const Eigen::MatrixXcd& u_hat, const Eigen::MatrixXcd& v_hat,
                                 double m1) {
  const double num = std::abs(quadratic_form(ops, HB, u_hat, v_hat).fourier);
  const double den = std::sqrt(ops.hm_norm2(v_hat, m1)) * ops.hm_norm2(u_hat, 0.0);
  return den > 0.0 ? num / den : 0.0;
}

/// Serialize one spectral snapshot.
inline void save_amplitude_snapshot(const std::string& path, const AmplitudeGrid& g,
                                    const SpectralState& s) {
  Container c;
  c.kind = "amplitude_snapshot";
  c.meta = {{"Lx", g.Lx}, {"nx", g.nx}, {"ntheta", g.ntheta}, {"t", s.t},
            {"layout", "a_hat[m][n], m in FFT order, n = 0..ntheta, row-major"}};
  Eigen::Matrix<cd, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = s.a_hat;
  c.put_complex("a_hat", {g.nx, g.ntheta + 1}, rm.data(), std::size_t(rm.size()));
  c.write(path);
}

inline std::pair<AmplitudeGrid, SpectralState> load_amplitude_snapshot(const std::string& path) {
  const Container c = Container::read(path);
  if (c.kind != "amplitude_snapshot") throw ConfigError("not an amplitude snapshot: " + path);
  AmplitudeGrid g;
  g.Lx = c.meta.at("Lx").get<double>();
  g.nx = c.meta.at("nx").get<int>();
  g.ntheta = c.meta.at("ntheta").get<int>();
  SpectralState s;
  s.t = c.meta.at("t").get<double>();
  const auto v = c.get_complex("a_hat");
  s.a_hat = Eigen::Map<const Eigen::Matrix<cd, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      v.data(), g.nx, g.ntheta + 1);
  return {g, s};
}

}  // namespace rwave
