#pragma once

/// @file fields.hpp
/// @brief Two-scale scalar fields used by the profile cascade.
///
/// A field is a finite Taylor jet in the slow normal variable y,
///
///   F = sum_j y^j [ mean_j(t, x) + sum_n e^{i n theta} fast_j^n(t, x, Y) ],
///
/// where mean_j is a slow array and fast_j^n an exponential polynomial in Y
/// whose coefficients are slow arrays. Only modes n >= 0 are stored; the
/// field is real, so mode -n is the conjugate of mode n. Profiles have no
/// mixed (j >= 1) fast parts; those appear only in products with mean jets.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <vector>

#include "rwave/exp_poly.hpp"
#include "rwave/slow_grid.hpp"

namespace rwave {

/// Shared layout of all fields of one cascade.
struct FieldSpace {
  SlowGrid grid;
  int ntheta = 16;    ///< modes 0..ntheta are kept
  int max_jet = 0;    ///< highest y-jet kept
  double prune_rel = 1e-14;

  SlowArray zeros() const { return grid.zeros(); }
};

struct Jet {
  SlowArray mean;               ///< size 0 means identically zero
  std::vector<ExpPolyA> fast;   ///< modes 0..ntheta (empty polynomial = zero)

  bool has_mean() const { return mean.size() > 0; }
};

class SField {
 public:
  SField() = default;
  explicit SField(const FieldSpace& s, int njets = 1) { resize(s, njets); }

  void resize(const FieldSpace& s, int njets) {
    jets_.resize(njets);
    for (auto& j : jets_) j.fast.resize(s.ntheta + 1);
  }

  int njets() const { return int(jets_.size()); }
  Jet& jet(int j) { return jets_[j]; }
  const Jet& jet(int j) const { return jets_[j]; }
  ExpPolyA& fast(int j, int n) { return jets_[j].fast[n]; }
  const ExpPolyA& fast(int j, int n) const { return jets_[j].fast[n]; }

  bool zero() const {
    for (const auto& j : jets_) {
      if (j.has_mean()) return false;
      for (const auto& f : j.fast)
        if (!f.empty()) return false;
    }
    return true;
  }

  double max_abs() const {
    double m = 0.0;
    for (const auto& j : jets_) {
      if (j.has_mean()) m = std::max(m, std::sqrt(j.mean.abs2().maxCoeff()));
      for (const auto& f : j.fast) m = std::max(m, f.max_abs());
    }
    return m;
  }
  double max_abs_fast(int j) const {
    double m = 0.0;
    if (j < njets())
      for (const auto& f : jets_[j].fast) m = std::max(m, f.max_abs());
    return m;
  }
  double max_abs_mean() const {
    double m = 0.0;
    for (const auto& j : jets_)
      if (j.has_mean()) m = std::max(m, std::sqrt(j.mean.abs2().maxCoeff()));
    return m;
  }

  /// Drop coefficients below rel * max_abs (relative pruning).
  SField& prune(double rel) {
    const double tol = rel * max_abs();
    if (tol == 0.0) return *this;
    for (auto& j : jets_)
      for (auto& f : j.fast) f.prune(tol);
    return *this;
  }

  /// this += s * o (jets of o beyond this are appended).
  SField& axpy(cd s, const SField& o) {
    if (o.njets() > njets()) {
      const std::size_t nf = o.jets_[0].fast.size();
      jets_.resize(o.njets());
      for (auto& j : jets_) j.fast.resize(nf);
    }
    for (int j = 0; j < o.njets(); ++j) {
      const Jet& b = o.jets_[j];
      Jet& a = jets_[j];
      if (b.has_mean()) {
        if (a.has_mean()) {
          a.mean += s * b.mean;
        } else {
          a.mean = s * b.mean;
        }
      }
      for (std::size_t n = 0; n < b.fast.size(); ++n) {
        if (b.fast[n].empty()) continue;
        a.fast[n].add_scaled(b.fast[n], s);
      }
    }
    return *this;
  }
  SField& operator+=(const SField& o) { return axpy(1.0, o); }
  SField& operator-=(const SField& o) { return axpy(-1.0, o); }
  SField& operator*=(cd s) {
    for (auto& j : jets_) {
      if (j.has_mean()) j.mean *= s;
      for (auto& f : j.fast) f *= s;
    }
    return *this;
  }
  friend SField operator*(cd s, SField a) { return a *= s; }
  friend SField operator*(SField a, cd s) { return a *= s; }
  friend SField operator*(SField a, double s) { return a *= cd(s); }
  friend SField operator-(SField a) { return a *= cd(-1.0); }

  /// Keep at most n jets.
  SField& truncate(int n) {
    if (njets() > std::max(n, 1)) jets_.resize(std::max(n, 1));
    return *this;
  }
  friend SField operator+(SField a, const SField& b) { return a += b; }
  friend SField operator-(SField a, const SField& b) { return a -= b; }

 private:
  std::vector<Jet> jets_;
};

using VField = std::array<SField, 2>;  ///< displacement-like 2-vector
using GField = std::array<SField, 4>;  ///< gradient / flux (4 entries)

// ---------------------------------------------------------------------------
// Linear operators
// ---------------------------------------------------------------------------

namespace field_ops {

inline SField map_all(const SField& a, const std::function<SlowArray(const SlowArray&)>& f) {
  SField out = a;
  for (int j = 0; j < out.njets(); ++j) {
    Jet& J = out.jet(j);
    if (J.has_mean()) J.mean = f(J.mean);
    for (auto& p : J.fast) p = p.map_coefs(f);
  }
  return out;
}

inline SField d_theta(const SField& a) {
  SField out = a;
  for (int j = 0; j < out.njets(); ++j) {
    Jet& J = out.jet(j);
    J.mean = SlowArray();
    J.fast[0] = ExpPolyA();
    for (std::size_t n = 1; n < J.fast.size(); ++n) J.fast[n] *= cd(0.0, double(n));
  }
  return out;
}

inline SField d_Y(const SField& a) {
  SField out = a;
  for (int j = 0; j < out.njets(); ++j) {
    Jet& J = out.jet(j);
    J.mean = SlowArray();
    for (auto& p : J.fast) p = p.derivative().normalize();
  }
  return out;
}

inline SField d_x(const FieldSpace& s, const SField& a) {
  return map_all(a, [&](const SlowArray& c) { return slow_dx(s.grid, c); });
}

inline SField d_t(const FieldSpace& s, const SField& a) {
  return map_all(a, [&](const SlowArray& c) { return slow_dt(s.grid, c); });
}

/// d/dy acting on the y-jets: y^j c_j -> j y^{j-1} c_j.
inline SField d_y(const FieldSpace& s, const SField& a) {
  SField out(s, std::max(1, a.njets() - 1));
  for (int j = 1; j < a.njets(); ++j) {
    const Jet& src = a.jet(j);
    Jet& dst = out.jet(j - 1);
    if (src.has_mean()) dst.mean = double(j) * src.mean;
    for (std::size_t n = 0; n < src.fast.size(); ++n)
      if (!src.fast[n].empty()) dst.fast[n] = src.fast[n] * cd(double(j));
  }
  return out;
}

/// Multiply every fast part by Y^p (used by the mixed-term modification).
inline ExpPolyA times_Y_power(const ExpPolyA& e, int p) {
  if (p == 0 || e.empty()) return e;
  ExpPolyA out;
  for (const auto& t : e.terms()) {
    ExpPolyA::Term n{t.lambda, {}};
    n.c.assign(p, SlowArray::Zero(t.c[0].size()));
    n.c.insert(n.c.end(), t.c.begin(), t.c.end());
    out.push_term(std::move(n));
  }
  return out.normalize();
}

/// Fast mode n (any sign) of a jet, conjugating for n < 0.
inline ExpPolyA mode(const Jet& J, int n) {
  if (n >= 0) return J.fast[n];
  return J.fast[-n].conj();
}

inline void append_terms(const ExpPolyA& src, ExpPolyA& dst) {
  for (const auto& t : src.terms()) dst.push_term(t);
}

namespace detail {

/// y += a * b over [lo, hi) with plain real arithmetic (vectorizes; no
/// special handling of infinities is needed for finite profile data).
inline void fma_range(cd* y, const cd* a, const cd* b, std::ptrdiff_t lo, std::ptrdiff_t hi) {
  double* yd = reinterpret_cast<double*>(y);
  const double* ad = reinterpret_cast<const double*>(a);
  const double* bd = reinterpret_cast<const double*>(b);
  for (std::ptrdiff_t k = lo; k < hi; ++k) {
    const double ar = ad[2 * k], ai = ad[2 * k + 1], br = bd[2 * k], bi = bd[2 * k + 1];
    yd[2 * k] += ar * br - ai * bi;
    yd[2 * k + 1] += ar * bi + ai * br;
  }
}

/// One coefficient-level multiply-add of a product plan.
struct FmaOp {
  const cd* a;
  const cd* b;
  cd* y;
};

}  // namespace detail

/// Product with truncation to ntheta modes and jet_cap (default max_jet)
/// jets. The coefficient products are first planned symbolically and then
/// executed over cache-sized chunks of the slow grid, so that each slow
/// array is streamed once per product rather than once per term pair.
inline SField mul(const FieldSpace& s, const SField& a, const SField& b, int jet_cap = -1) {
  using Term = ExpPolyA::Term;
  const int N = s.ntheta;
  const int cap = jet_cap >= 0 ? jet_cap : s.max_jet;
  const int nj = std::min(cap + 1, a.njets() + b.njets() - 1);
  SField out(s, std::max(nj, 1));
  if (a.njets() == 0 || b.njets() == 0) return out;
  const Eigen::Index S = s.grid.size();
  // Conjugate (negative-mode) copies, computed once.
  auto conj_table = [&](const Jet& J) {
    std::vector<ExpPolyA> c(J.fast.size());
    for (std::size_t n = 1; n < J.fast.size(); ++n)
      if (!J.fast[n].empty()) c[n] = J.fast[n].conj();
    return c;
  };
  std::vector<std::vector<ExpPolyA>> ca(a.njets()), cb(b.njets());
  for (int j = 0; j < a.njets(); ++j) ca[j] = conj_table(a.jet(j));
  for (int j = 0; j < b.njets(); ++j) cb[j] = conj_table(b.jet(j));
  auto get = [&](const SField& f, const std::vector<std::vector<ExpPolyA>>& c, int j,
                 int n) -> const ExpPolyA& {
    return n >= 0 ? f.jet(j).fast[n] : c[j][-n];
  };

  // Pass 1: output term structure (exponent, degree) per (jet, mode).
  struct Slot {
    cd lambda;
    int degree;
  };
  std::vector<std::vector<std::vector<Slot>>> plan(nj, std::vector<std::vector<Slot>>(N + 1));
  auto find_slot = [&](std::vector<Slot>& v, cd lambda, int deg) {
    for (std::size_t q = 0; q < v.size(); ++q)
      if (same_exponent(v[q].lambda, lambda)) {
        v[q].degree = std::max(v[q].degree, deg);
        return q;
      }
    v.push_back({lambda, deg});
    return v.size() - 1;
  };
  auto visit = [&](auto&& on_pair, auto&& on_mean_fast, auto&& on_mean_mean) {
    for (int i = 0; i < a.njets(); ++i)
      for (int l = 0; l < b.njets(); ++l) {
        const int j = i + l;
        if (j >= nj) continue;
        const Jet& A = a.jet(i);
        const Jet& B = b.jet(l);
        if (A.has_mean() && B.has_mean()) on_mean_mean(j, A.mean, B.mean);
        for (int n = 0; n <= N; ++n) {
          if (A.has_mean() && !B.fast[n].empty()) on_mean_fast(j, n, A.mean, B.fast[n]);
          if (B.has_mean() && !A.fast[n].empty()) on_mean_fast(j, n, B.mean, A.fast[n]);
          for (int n1 = std::max(-N, n - N); n1 <= std::min(N, n + N); ++n1) {
            const ExpPolyA& fa = get(a, ca, i, n1);
            if (fa.empty()) continue;
            const ExpPolyA& fb = get(b, cb, l, n - n1);
            if (fb.empty()) continue;
            on_pair(j, n, fa, fb);
          }
        }
      }
  };
  visit(
      [&](int j, int n, const ExpPolyA& fa, const ExpPolyA& fb) {
        for (const auto& ta : fa.terms())
          for (const auto& tb : fb.terms()) {
            const int deg = ta.degree() + tb.degree();
            if (deg > ExpPolyA::degree_cap) {
              throw DegreeOverflowError("field product: polynomial degree exceeds cap");
            }
            find_slot(plan[j][n], ta.lambda + tb.lambda, deg);
          }
      },
      [&](int j, int n, const SlowArray&, const ExpPolyA& f) {
        for (const auto& t : f.terms()) find_slot(plan[j][n], t.lambda, t.degree());
      },
      [&](int j, const SlowArray&, const SlowArray&) {
        if (!out.jet(j).has_mean()) out.jet(j).mean = SlowArray::Zero(S);
      });
  // Allocate the output terms (zero coefficients).
  for (int j = 0; j < nj; ++j)
    for (int n = 0; n <= N; ++n) {
      ExpPolyA& o = out.fast(j, n);
      for (const Slot& sl : plan[j][n])
        o.push_term(Term{sl.lambda, std::vector<SlowArray>(sl.degree + 1, SlowArray::Zero(S))});
    }
  // Pass 2: the list of coefficient products.
  std::vector<detail::FmaOp> ops;
  auto term_of = [&](int j, int n, cd lambda) -> Term& {
    auto& terms = out.fast(j, n).terms_mut();
    for (auto& t : terms)
      if (same_exponent(t.lambda, lambda)) return t;
    throw DomainError("field product: missing planned term");
  };
  visit(
      [&](int j, int n, const ExpPolyA& fa, const ExpPolyA& fb) {
        for (const auto& ta : fa.terms())
          for (const auto& tb : fb.terms()) {
            Term& t = term_of(j, n, ta.lambda + tb.lambda);
            for (int p = 0; p <= ta.degree(); ++p)
              for (int q = 0; q <= tb.degree(); ++q)
                ops.push_back({ta.c[p].data(), tb.c[q].data(), t.c[p + q].data()});
          }
      },
      [&](int j, int n, const SlowArray& m, const ExpPolyA& f) {
        for (const auto& tf : f.terms()) {
          Term& t = term_of(j, n, tf.lambda);
          for (int p = 0; p <= tf.degree(); ++p) ops.push_back({m.data(), tf.c[p].data(), t.c[p].data()});
        }
      },
      [&](int j, const SlowArray& ma, const SlowArray& mb) {
        ops.push_back({ma.data(), mb.data(), out.jet(j).mean.data()});
      });
  // Pass 3: execute in chunks.
  constexpr std::ptrdiff_t chunk = 256;
  for (std::ptrdiff_t lo = 0; lo < S; lo += chunk) {
    const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(S, lo + chunk);
    for (const auto& op : ops) detail::fma_range(op.y, op.a, op.b, lo, hi);
  }
  for (int j = 0; j < nj; ++j)
    for (int n = 0; n <= N; ++n) out.fast(j, n).normalize();
  return out.prune(s.prune_rel);
}

}  // namespace field_ops
}  // namespace rwave
