#pragma once

/// @file assemble.hpp
/// @brief Pointwise evaluation of the approximate solution
///
///   U_a(t, x, y) = sum_{k = k_min}^{k_max} eps^k U_k(t, x, y, (x - c t) / eps, y / eps)
///
/// built from a finished cascade. The Y- and theta-dependence is evaluated
/// exactly (exponential polynomials, Fourier modes); the slow (t, x)
/// coefficients are interpolated with a not-a-knot cubic spline in t and
/// trigonometric interpolation in x. The mean parts are interpolated from
/// their finite-difference snapshots with a cubic spline in y whose slope at
/// y = 0 is the boundary-condition jet, so that the traction of the mean part
/// is reproduced exactly on y = 0.
///
/// The evaluator keeps small caches keyed on t and on (t, x); one instance
/// must not be shared between threads (copies are independent).

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <map>
#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "rwave/cascade.hpp"
#include "rwave/diagnostics.hpp"
#include "rwave/errors.hpp"
#include "rwave/slow_grid.hpp"

namespace rwave {

class ApproxField {
 public:
  /// Orders k_min..k_max of the cascade (k_max <= cascade order).
  ApproxField(const Cascade& cas, double eps, int k_max, int k_min = 2, bool with_mean = true)
      : grid_(cas.config().grid),
        interp_(grid_),
        eps_(eps),
        c_(cas.rayleigh().c),
        ntheta_(cas.config().ntheta) {
    if (!(eps > 0.0)) throw DomainError("ApproxField: eps must be positive");
    if (k_max > cas.config().order) throw ConfigError("ApproxField: order beyond the cascade");
    for (int k = k_min; k <= k_max; ++k) {
      if (!cas.has_profile(k)) continue;
      const Profile& p = cas.profile(k);
      const double w = std::pow(eps, k);
      for (int c = 0; c < 2; ++c) {
        for (int j = 0; j < p.base[c].njets(); ++j)
          for (int n = 0; n <= ntheta_; ++n) add_terms(c, n, j, w, p.base[c].fast(j, n));
      }
      for (int n = 1; n <= ntheta_ && n < int(p.alpha.size()); ++n) {
        if (p.alpha[n].size() == 0) continue;
        const Vec2EP a = cas.fast().rhat(p.alpha[n], n);
        for (int c = 0; c < 2; ++c) add_terms(c, n, 0, w, a[c]);
      }
      if (with_mean && !p.mean.zero) add_mean(p.mean, w);
    }
    pack();
  }

  double eps() const { return eps_; }
  /// Largest depth at which the mean parts are available (infinite if none).
  double y_limit() const { return y_limit_; }

  /// U_a(t, x, y) = (u, v).
  std::array<double, 2> operator()(double t, double x, double y) const {
    if (y < 0.0) throw DomainError("ApproxField: y < 0");
    if (t <= 0.0) return {0.0, 0.0};
    if (y > y_limit_ + 1e-12) {
      throw DomainError("ApproxField: y beyond the stored mean profiles");
    }
    const Column& col = column(t, x);
    const double Y = y / eps_;
    std::array<double, 2> out{0.0, 0.0};
    // Fast part: sum over (lambda, degree) slots with y-jet powers.
    for (std::size_t g = 0; g < groups_.size(); ++g) {
      const Group& G = groups_[g];
      const cd e = std::exp(G.lambda * Y);
      for (int s = G.first; s < G.last; ++s) {
        const Slot& S = slots_[s];
        const double pw = (S.deg ? std::pow(Y, S.deg) : 1.0) * (S.jet ? std::pow(y, S.jet) : 1.0);
        const cd m = e * pw;
        out[0] += (col.coef[0](s) * m).real();
        out[1] += (col.coef[1](s) * m).real();
      }
    }
    // Mean parts.
    for (std::size_t m = 0; m < means_.size(); ++m) {
      out[0] += col.mean[m][0].eval(y);
      out[1] += col.mean[m][1].eval(y);
    }
    return out;
  }

  /// Adapter for the residual probe and the norm code.
  FieldEval as_eval() const {
    auto self = std::make_shared<ApproxField>(*this);
    return [self](double t, double x, double y) { return (*self)(t, x, y); };
  }

 private:
  /// A cubic spline in y on uniform knots with prescribed slope at y = 0 and
  /// a natural end condition at the last knot.
  struct YSpline {
    double hy = 1.0;
    Eigen::VectorXd f, m;  // values and second derivatives
    void build(const Eigen::VectorXd& vals, double h, double slope0) {
      hy = h;
      f = vals;
      const int n = int(vals.size());
      m = Eigen::VectorXd::Zero(n);
      if (n < 3) return;
      // Tridiagonal system for the second derivatives.
      Eigen::VectorXd a(n), b(n), c(n), d(n);
      b(0) = 2.0;
      c(0) = 1.0;
      a(0) = 0.0;
      d(0) = 6.0 / h * ((f(1) - f(0)) / h - slope0);
      for (int i = 1; i < n - 1; ++i) {
        a(i) = 1.0;
        b(i) = 4.0;
        c(i) = 1.0;
        d(i) = 6.0 / (h * h) * (f(i + 1) - 2.0 * f(i) + f(i - 1));
      }
      a(n - 1) = 0.0;
      b(n - 1) = 1.0;
      c(n - 1) = 0.0;
      d(n - 1) = 0.0;
      for (int i = 1; i < n; ++i) {
        const double w = a(i) / b(i - 1);
        b(i) -= w * c(i - 1);
        d(i) -= w * d(i - 1);
      }
      m(n - 1) = d(n - 1) / b(n - 1);
      for (int i = n - 2; i >= 0; --i) m(i) = (d(i) - c(i) * m(i + 1)) / b(i);
    }
    double eval(double y) const {
      const int n = int(f.size());
      if (n == 0) return 0.0;
      int i = std::clamp(int(std::floor(y / hy)), 0, n - 2);
      const double u = y / hy - i, h2 = hy * hy / 6.0;
      return (1 - u) * f(i) + u * f(i + 1) + h2 * (((1 - u) * (1 - u) * (1 - u) - (1 - u)) * m(i) +
                                                   (u * u * u - u) * m(i + 1));
    }
  };

  struct Entry {
    int comp, mode, slot;
    double weight;  // eps^k times 1 (mode 0) or 2 (modes n >= 1)
  };
  struct Slot {
    cd lambda;
    int deg, jet;
  };
  struct Group {
    cd lambda;
    int first, last;
  };
  struct MeanData {
    double weight, hy;
    int rows;
    Eigen::MatrixXd u, v;  // (rows * nx) x nt, column = slow level
    SlowArray slope_u, slope_v;
  };
  struct Column {
    double t = 0.0, x = 0.0;
    std::array<Eigen::VectorXcd, 2> coef;
    std::vector<std::array<YSpline, 2>> mean;
  };
  struct TRows {
    double t = 0.0;
    Eigen::VectorXcd fast;                               // (entries * nx)
    std::vector<std::array<Eigen::VectorXd, 2>> mean;    // (rows * nx)
    std::vector<std::array<Eigen::VectorXcd, 2>> slope;  // nx
  };

  void add_terms(int c, int n, int jet, double w, const ExpPolyA& e) {
    for (const auto& term : e.terms())
      for (int d = 0; d < int(term.c.size()); ++d) {
        if (term.c[d].size() == 0 || term.c[d].abs2().maxCoeff() == 0.0) continue;
        raw_.push_back({c, n, slot_of(term.lambda, d, jet), w * (n == 0 ? 1.0 : 2.0)});
        coefs_.push_back(term.c[d]);
      }
  }

  int slot_of(cd lambda, int deg, int jet) {
    for (std::size_t s = 0; s < tmp_slots_.size(); ++s) {
      const Slot& S = tmp_slots_[s];
      if (S.deg == deg && S.jet == jet && std::abs(S.lambda - lambda) <= 1e-12 * (1.0 + std::abs(lambda)))
        return int(s);
    }
    tmp_slots_.push_back({lambda, deg, jet});
    return int(tmp_slots_.size()) - 1;
  }

  void add_mean(const MeanProfile& mp, double w) {
    MeanData md;
    md.weight = w;
    md.hy = mp.hy;
    md.rows = mp.rows;
    const int nx = grid_.nx, nt = grid_.nt;
    md.u.resize(std::size_t(mp.rows) * nx, nt);
    md.v.resize(std::size_t(mp.rows) * nx, nt);
    for (int i = 0; i < nt; ++i) {
      for (int j = 0; j < mp.rows; ++j)
        for (int q = 0; q < nx; ++q) {
          md.u(std::size_t(j) * nx + q, i) = mp.u[i](j, q);
          md.v(std::size_t(j) * nx + q, i) = mp.v[i](j, q);
        }
    }
    md.slope_u = mp.jets.size() > 1 ? mp.jets[1][0] : grid_.zeros();
    md.slope_v = mp.jets.size() > 1 ? mp.jets[1][1] : grid_.zeros();
    const double lim = (mp.rows - 1) * mp.hy;
    y_limit_ = std::min(y_limit_, lim);
    means_.push_back(std::move(md));
  }

  /// Order slots by exponent (one complex exponential per group) and stack
  /// the coefficient arrays into one matrix for the t interpolation.
  void pack() {
    std::vector<int> order(tmp_slots_.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = int(i);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      const cd la = tmp_slots_[a].lambda, lb = tmp_slots_[b].lambda;
      if (la.real() != lb.real()) return la.real() < lb.real();
      return la.imag() < lb.imag();
    });
    std::vector<int> pos(order.size());
    slots_.clear();
    for (std::size_t i = 0; i < order.size(); ++i) {
      pos[order[i]] = int(i);
      slots_.push_back(tmp_slots_[order[i]]);
    }
    groups_.clear();
    for (int s = 0; s < int(slots_.size()); ++s) {
      if (groups_.empty() || std::abs(groups_.back().lambda - slots_[s].lambda) >
                                 1e-12 * (1.0 + std::abs(slots_[s].lambda))) {
        groups_.push_back({slots_[s].lambda, s, s + 1});
      } else {
        groups_.back().last = s + 1;
      }
    }
    for (auto& e : raw_) e.slot = pos[e.slot];
    entries_ = std::move(raw_);
    const int nx = grid_.nx, nt = grid_.nt;
    stack_.resize(std::size_t(entries_.size()) * nx, nt);
    for (std::size_t e = 0; e < entries_.size(); ++e)
      for (int i = 0; i < nt; ++i)
        for (int q = 0; q < nx; ++q) stack_(e * nx + q, i) = coefs_[e](grid_.idx(i, q));
    coefs_.clear();
    tmp_slots_.clear();
  }

  const TRows& trows(double t) const {
    for (const auto& r : tcache_)
      if (r->t == t) return *r;
    auto r = std::make_shared<TRows>();
    r->t = t;
    const Eigen::VectorXd wt = interp_.spline().weights(t);
    if (stack_.rows() > 0) r->fast = stack_ * wt.cast<cd>();
    for (const auto& md : means_) {
      r->mean.push_back({md.u * wt, md.v * wt});
      Eigen::Map<const Eigen::MatrixXcd> Su(md.slope_u.data(), grid_.nx, grid_.nt);
      Eigen::Map<const Eigen::MatrixXcd> Sv(md.slope_v.data(), grid_.nx, grid_.nt);
      r->slope.push_back({Su * wt.cast<cd>(), Sv * wt.cast<cd>()});
    }
    if (tcache_.size() >= 8) tcache_.erase(tcache_.begin());
    tcache_.push_back(r);
    return *r;
  }

  const Column& column(double t, double x) const {
    for (const auto& c : ccache_)
      if (c->t == t && c->x == x) return *c;
    const TRows& tr = trows(t);
    auto col = std::make_shared<Column>();
    col->t = t;
    col->x = x;
    const int nx = grid_.nx;
    const Eigen::VectorXd wx = trig_weights(nx, grid_.Lx, x);
    const double theta = (x - c_ * t) / eps_;
    std::vector<cd> phase(ntheta_ + 1);
    for (int n = 0; n <= ntheta_; ++n) phase[n] = std::exp(cd(0.0, n * theta));
    for (int c = 0; c < 2; ++c) col->coef[c] = Eigen::VectorXcd::Zero(slots_.size());
    for (std::size_t e = 0; e < entries_.size(); ++e) {
      const Entry& E = entries_[e];
      cd v = 0.0;
      const cd* p = tr.fast.data() + e * nx;
      for (int q = 0; q < nx; ++q) v += wx(q) * p[q];
      col->coef[E.comp](E.slot) += E.weight * phase[E.mode] * v;
    }
    for (std::size_t m = 0; m < means_.size(); ++m) {
      const MeanData& md = means_[m];
      std::array<YSpline, 2> sp;
      for (int c = 0; c < 2; ++c) {
        const Eigen::VectorXd& rows = tr.mean[m][c];
        Eigen::VectorXd vals(md.rows);
        for (int j = 0; j < md.rows; ++j) vals(j) = md.weight * rows.segment(std::size_t(j) * nx, nx).dot(wx);
        const double slope = md.weight * (tr.slope[m][c].array() * wx.array().cast<cd>()).sum().real();
        sp[c].build(vals, md.hy, slope);
      }
      col->mean.push_back(std::move(sp));
    }
    if (ccache_.size() >= 48) ccache_.erase(ccache_.begin());
    ccache_.push_back(col);
    return *col;
  }

  SlowGrid grid_;
  SlowInterpolator interp_;
  double eps_, c_;
  int ntheta_;
  double y_limit_ = std::numeric_limits<double>::infinity();
  std::vector<Slot> tmp_slots_, slots_;
  std::vector<Group> groups_;
  std::vector<Entry> raw_, entries_;
  std::vector<SlowArray> coefs_;
  Eigen::MatrixXcd stack_;
  std::vector<MeanData> means_;
  mutable std::vector<std::shared_ptr<TRows>> tcache_;
  mutable std::vector<std::shared_ptr<Column>> ccache_;
};

}  // namespace rwave
