#pragma once

/// @file slow_grid.hpp
/// @brief Slow (t, x) grid, slow derivatives and interpolation weights.
///
/// Slow arrays are complex vectors of length nt*nx in t-major order
/// (index i*nx + j for time level i and x node j). The x direction is
/// periodic with length Lx and is differentiated spectrally; t uses fourth
/// order differences. Every profile vanishes for t <= 0, so values at
/// negative time levels are exactly zero and the t = 0 end needs no one-sided
/// closure.

#include <cmath>
#include <complex>
#include <map>
#include <mutex>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

#include "rwave/errors.hpp"

namespace rwave {

using cd = std::complex<double>;
using SlowArray = Eigen::ArrayXcd;

struct SlowGrid {
  int nt = 64;        ///< time levels t_i = i * dt, i = 0..nt-1
  int nx = 32;        ///< periodic x nodes x_j = j * Lx / nx
  double T = 1.0;     ///< final time
  double Lx = 2.0 * std::numbers::pi;

  double dt() const { return T / double(nt - 1); }
  double dx() const { return Lx / double(nx); }
  double t(int i) const { return i * dt(); }
  double x(int j) const { return j * dx(); }
  int size() const { return nt * nx; }
  int idx(int i, int j) const { return i * nx + j; }
  SlowArray zeros() const { return SlowArray::Zero(size()); }

  /// Fill a slow array from f(t, x).
  template <class F>
  SlowArray sample(F&& f) const {
    SlowArray a(size());
    for (int i = 0; i < nt; ++i)
      for (int j = 0; j < nx; ++j) a(idx(i, j)) = f(t(i), x(j));
    return a;
  }

  bool operator==(const SlowGrid& o) const {
    return nt == o.nt && nx == o.nx && T == o.T && Lx == o.Lx;
  }
};

/// Periodic spectral differentiation matrix (even n; Nyquist mode dropped).
inline const Eigen::MatrixXd& spectral_diff_matrix(int n, double L) {
  static std::mutex mu;
  static std::map<std::pair<int, double>, Eigen::MatrixXd> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto key = std::make_pair(n, L);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(n, n);
  const double pi = std::numbers::pi;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      const int k = i - j;
      if (n % 2 == 0) {
        D(i, j) = 0.5 * ((k % 2 == 0) ? 1.0 : -1.0) / std::tan(k * pi / n);
      } else {
        D(i, j) = 0.5 * ((k % 2 == 0) ? 1.0 : -1.0) / std::sin(k * pi / n);
      }
      D(i, j) *= 2.0 * pi / L;
    }
  return cache.emplace(key, std::move(D)).first->second;
}

/// Spectral d/dx of every time row.
inline SlowArray slow_dx(const SlowGrid& g, const SlowArray& a) {
  const Eigen::MatrixXd& D = spectral_diff_matrix(g.nx, g.Lx);
  Eigen::Map<const Eigen::MatrixXcd> A(a.data(), g.nx, g.nt);
  SlowArray out(g.size());
  Eigen::Map<Eigen::MatrixXcd> O(out.data(), g.nx, g.nt);
  const Eigen::MatrixXd Ar = A.real(), Ai = A.imag();
  const Eigen::MatrixXd re = D * Ar, im = D * Ai;
  O.real() = re;
  O.imag() = im;
  return out;
}

/// Fourth-order d/dt. Levels i < 0 are zero (causality); the final two
/// levels use one-sided fourth-order closures.
inline SlowArray slow_dt(const SlowGrid& g, const SlowArray& a) {
  const int nt = g.nt, nx = g.nx;
  if (nt < 5) throw DomainError("slow_dt: need at least 5 time levels");
  const double s = 1.0 / (12.0 * g.dt());
  SlowArray out(g.size());
  Eigen::Map<const Eigen::MatrixXcd> A(a.data(), nx, nt);
  Eigen::Map<Eigen::MatrixXcd> O(out.data(), nx, nt);
  auto col = [&](int i) -> Eigen::VectorXcd {
    if (i < 0) return Eigen::VectorXcd::Zero(nx);
    return A.col(i);
  };
  for (int i = 0; i < nt; ++i) {
    if (i <= nt - 3) {
      O.col(i) = s * (-col(i + 2) + 8.0 * col(i + 1) - 8.0 * col(i - 1) + col(i - 2));
    } else if (i == nt - 2) {
      O.col(i) = s * (3.0 * col(i + 1) + 10.0 * col(i) - 18.0 * col(i - 1) + 6.0 * col(i - 2) -
                      col(i - 3));
    } else {
      O.col(i) = s * (25.0 * col(i) - 48.0 * col(i - 1) + 36.0 * col(i - 2) -
                      16.0 * col(i - 3) + 3.0 * col(i - 4));
    }
  }
  return out;
}

/// Cubic spline (not-a-knot) on a uniform grid, exposed as interpolation
/// weights so that it can be applied to many arrays at once.
class CubicSplineWeights {
 public:
  CubicSplineWeights() = default;
  CubicSplineWeights(int n, double x0, double h) : n_(n), x0_(x0), h_(h) {
    if (n < 4) throw DomainError("CubicSplineWeights: need at least 4 nodes");
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n), B = Eigen::MatrixXd::Zero(n, n);
    A(0, 0) = 1.0;
    A(0, 1) = -2.0;
    A(0, 2) = 1.0;
    A(n - 1, n - 3) = 1.0;
    A(n - 1, n - 2) = -2.0;
    A(n - 1, n - 1) = 1.0;
    for (int i = 1; i < n - 1; ++i) {
      A(i, i - 1) = 1.0;
      A(i, i) = 4.0;
      A(i, i + 1) = 1.0;
      const double w = 6.0 / (h * h);
      B(i, i - 1) = w;
      B(i, i) = -2.0 * w;
      B(i, i + 1) = w;
    }
    K_ = A.partialPivLu().solve(B);
  }

  int size() const { return n_; }

  /// Weight vector w with s(x) = sum_i w_i y_i (and its first/second x
  /// derivatives for deriv = 1, 2). Points outside the grid extrapolate
  /// with the end cubic.
  Eigen::VectorXd weights(double x, int deriv = 0) const {
    const double s = (x - x0_) / h_;
    int i = int(std::floor(s));
    i = std::clamp(i, 0, n_ - 2);
    const double u = s - i;
    Eigen::VectorXd w = Eigen::VectorXd::Zero(n_);
    double a, b, cm, dm;
    const double h2 = h_ * h_ / 6.0;
    if (deriv == 0) {
      a = 1.0 - u;
      b = u;
      cm = h2 * ((1 - u) * (1 - u) * (1 - u) - (1 - u));
      dm = h2 * (u * u * u - u);
    } else if (deriv == 1) {
      a = -1.0 / h_;
      b = 1.0 / h_;
      cm = h2 * (-3.0 * (1 - u) * (1 - u) + 1.0) / h_;
      dm = h2 * (3.0 * u * u - 1.0) / h_;
    } else {
      a = 0.0;
      b = 0.0;
      cm = (1 - u);
      dm = u;
    }
    w(i) += a;
    w(i + 1) += b;
    w += cm * K_.row(i).transpose() + dm * K_.row(i + 1).transpose();
    return w;
  }

 private:
  int n_ = 0;
  double x0_ = 0.0, h_ = 1.0;
  Eigen::MatrixXd K_;  // second derivatives = K * values
};

/// Trigonometric interpolation weights on a periodic uniform grid of n nodes
/// over [0, L): f(x) = sum_j w_j f_j, exact for band-limited data.
inline Eigen::VectorXd trig_weights(int n, double L, double x) {
  Eigen::VectorXd w(n);
  const double pi = std::numbers::pi;
  for (int j = 0; j < n; ++j) {
    const double d = 2.0 * pi * (x - j * L / n) / L;
    double s = 1.0;
    const int kmax = (n - 1) / 2;
    for (int k = 1; k <= kmax; ++k) s += 2.0 * std::cos(k * d);
    if (n % 2 == 0) s += std::cos((n / 2) * d);
    w(j) = s / n;
  }
  return w;
}

/// Evaluate slow arrays at an arbitrary (t, x): cubic spline in t, spectral
/// (trigonometric) in x. Times t <= 0 return zero (causality).
class SlowInterpolator {
 public:
  explicit SlowInterpolator(const SlowGrid& g) : g_(g), spline_(g.nt, 0.0, g.dt()) {}

  struct Weights {
    Eigen::VectorXd wt;  // length nt (zero if t <= 0)
    Eigen::VectorXd wx;  // length nx
    int i0 = 0, i1 = -1; // support of wt above the truncation threshold
  };

  Weights weights(double t, double x) const {
    Weights w;
    w.wx = trig_weights(g_.nx, g_.Lx, x);
    if (t <= 0.0) {
      w.wt = Eigen::VectorXd::Zero(g_.nt);
      return w;
    }
    w.wt = spline_.weights(t);
    w.i0 = g_.nt;
    for (int i = 0; i < g_.nt; ++i)
      if (std::abs(w.wt(i)) > 1e-17) {
        w.i0 = std::min(w.i0, i);
        w.i1 = i;
      }
    return w;
  }

  cd apply(const Weights& w, const SlowArray& a) const {
    cd acc = 0.0;
    for (int i = w.i0; i <= w.i1; ++i) {
      if (w.wt(i) == 0.0) continue;
      cd row = 0.0;
      const cd* p = a.data() + std::size_t(i) * g_.nx;
      for (int j = 0; j < g_.nx; ++j) row += w.wx(j) * p[j];
      acc += w.wt(i) * row;
    }
    return acc;
  }

  /// Interpolate in t only, returning the x-row (length nx).
  Eigen::VectorXcd t_row(const Eigen::VectorXd& wt, const SlowArray& a) const {
    Eigen::Map<const Eigen::MatrixXcd> A(a.data(), g_.nx, g_.nt);
    return A * wt.cast<cd>();
  }

  const SlowGrid& grid() const { return g_; }
  const CubicSplineWeights& spline() const { return spline_; }

 private:
  SlowGrid g_;
  CubicSplineWeights spline_;
};

}  // namespace rwave
