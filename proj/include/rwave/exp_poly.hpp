#pragma once

/// @file exp_poly.hpp
/// @brief Exponential polynomials  f(Y) = sum_j p_j(Y) e^{lambda_j Y}.
///
/// The Y-dependence of every profile is carried exactly in this form, so all
/// Y-integrals of the construction (tails, Duhamel integrals, traces) are
/// closed-form. The coefficient type C is either a scalar (std::complex) or a
/// whole slow-grid array (Eigen::ArrayXcd), in which case one ExpPoly
/// represents a function of (t, x, Y) with exact Y-dependence.

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rwave/errors.hpp"

namespace rwave {

using cd = std::complex<double>;
using SlowArray = Eigen::ArrayXcd;

/// Coefficient-type adaptor. Specialized for scalars and slow arrays.
template <class C>
struct CoefTraits;

template <>
struct CoefTraits<cd> {
  static cd zero_like(const cd&) { return cd(0.0); }
  static double max_abs(const cd& c) { return std::abs(c); }
  static cd conj(const cd& c) { return std::conj(c); }
  static void axpy(cd& y, cd a, const cd& x) { y += a * x; }
  static void fma(cd& y, const cd& a, const cd& b) { y += a * b; }
};

template <>
struct CoefTraits<SlowArray> {
  static SlowArray zero_like(const SlowArray& c) { return SlowArray::Zero(c.size()); }
  static double max_abs(const SlowArray& c) { return c.size() ? std::sqrt(c.abs2().maxCoeff()) : 0.0; }
  static SlowArray conj(const SlowArray& c) { return c.conjugate(); }
  static void axpy(SlowArray& y, cd a, const SlowArray& x) { y += a * x; }
  static void fma(SlowArray& y, const SlowArray& a, const SlowArray& b) { y += a * b; }
};

/// Exponent equality used for deduplication.
inline bool same_exponent(cd a, cd b, double tol = 1e-12) {
  return std::abs(a - b) <= tol * std::max(1.0, std::abs(a));
}

template <class C>
class ExpPoly {
 public:
  using Traits = CoefTraits<C>;

  struct Term {
    cd lambda;
    std::vector<C> c;  ///< c[p] multiplies Y^p
    int degree() const { return int(c.size()) - 1; }
  };

  /// Maximum polynomial degree permitted in any term.
  static inline int degree_cap = 16;

  ExpPoly() = default;

  static ExpPoly monomial(cd lambda, const C& coef, int p = 0) {
    ExpPoly e;
    Term t{lambda, {}};
    t.c.assign(p + 1, Traits::zero_like(coef));
    t.c[p] = coef;
    e.terms_.push_back(std::move(t));
    e.check_degree();
    return e;
  }

  const std::vector<Term>& terms() const { return terms_; }
  std::vector<Term>& terms_mut() { return terms_; }
  bool empty() const { return terms_.empty(); }
  std::size_t size() const { return terms_.size(); }

  int max_degree() const {
    int d = -1;
    for (const auto& t : terms_) d = std::max(d, t.degree());
    return d;
  }

  /// Largest coefficient magnitude over all terms.
  double max_abs() const {
    double m = 0.0;
    for (const auto& t : terms_)
      for (const auto& c : t.c) m = std::max(m, Traits::max_abs(c));
    return m;
  }

  /// Accumulate coef * Y^p e^{lambda Y} (keeps the term list unsorted until
  /// normalize() is called).
  void push(cd lambda, int p, const C& coef) {
    Term t{lambda, {}};
    t.c.assign(p + 1, Traits::zero_like(coef));
    t.c[p] = coef;
    terms_.push_back(std::move(t));
  }
  void push_term(Term t) { terms_.push_back(std::move(t)); }

  /// Sort by exponent and merge duplicates (tolerance 1e-12).
  ExpPoly& normalize() {
    if (terms_.size() < 2) {
      check_degree();
      return *this;
    }
    std::sort(terms_.begin(), terms_.end(), [](const Term& a, const Term& b) {
      if (a.lambda.real() != b.lambda.real()) return a.lambda.real() < b.lambda.real();
      return a.lambda.imag() < b.lambda.imag();
    });
    std::vector<Term> out;
    out.reserve(terms_.size());
    for (auto& t : terms_) {
      if (!out.empty() && same_exponent(out.back().lambda, t.lambda)) {
        merge_into(out.back(), std::move(t));
      } else {
        out.push_back(std::move(t));
      }
    }
    terms_ = std::move(out);
    check_degree();
    return *this;
  }

  /// Drop coefficients with magnitude below abs_tol; trim empty terms.
  ExpPoly& prune(double abs_tol) {
    std::vector<Term> out;
    out.reserve(terms_.size());
    for (auto& t : terms_) {
      int last = -1;
      for (int p = 0; p <= t.degree(); ++p) {
        if (Traits::max_abs(t.c[p]) < abs_tol) {
          t.c[p] = Traits::zero_like(t.c[p]);
        } else {
          last = p;
        }
      }
      if (last >= 0) {
        t.c.resize(last + 1);
        out.push_back(std::move(t));
      }
    }
    terms_ = std::move(out);
    return *this;
  }

  // ---- ring operations -------------------------------------------------

  ExpPoly& operator+=(const ExpPoly& o) { return add_scaled(o, cd(1.0)); }
  ExpPoly& operator-=(const ExpPoly& o) { return add_scaled(o, cd(-1.0)); }

  /// this += s * o, merging terms of equal exponent in place.
  ExpPoly& add_scaled(const ExpPoly& o, cd s) {
    for (const auto& t : o.terms_) {
      Term& d = slot(t.lambda, t.degree(), t.c[0]);
      for (int p = 0; p <= t.degree(); ++p) Traits::axpy(d.c[p], s, t.c[p]);
    }
    return normalize();
  }
  ExpPoly& operator*=(cd s) {
    for (auto& t : terms_)
      for (auto& c : t.c) c *= s;
    return *this;
  }
  friend ExpPoly operator+(ExpPoly a, const ExpPoly& b) { return a += b; }
  friend ExpPoly operator-(ExpPoly a, const ExpPoly& b) { return a -= b; }
  friend ExpPoly operator*(ExpPoly a, cd s) { return a *= s; }
  friend ExpPoly operator*(cd s, ExpPoly a) { return a *= s; }
  ExpPoly operator-() const { return (*this) * cd(-1.0); }

  /// Multiply every coefficient by a coefficient-type value (pointwise for
  /// slow arrays).
  ExpPoly mul_coef(const C& w) const {
    ExpPoly out = *this;
    for (auto& t : out.terms_)
      for (auto& c : t.c) c = c * w;
    return out;
  }

  /// Product: exponents add, polynomials convolve.
  friend ExpPoly operator*(const ExpPoly& a, const ExpPoly& b) {
    ExpPoly out;
    a.multiply_accumulate(b, out);
    return out.normalize();
  }

  /// out += (*this) * b; terms of equal exponent are merged, the order of
  /// out is left unsorted until normalize() is called.
  void multiply_accumulate(const ExpPoly& b, ExpPoly& out) const {
    for (const auto& ta : terms_) {
      for (const auto& tb : b.terms_) {
        const int deg = ta.degree() + tb.degree();
        if (deg > degree_cap) {
          throw DegreeOverflowError("ExpPoly: polynomial degree " + std::to_string(deg) +
                                    " exceeds cap " + std::to_string(degree_cap));
        }
        Term& t = out.slot(ta.lambda + tb.lambda, deg, ta.c[0]);
        for (int i = 0; i <= ta.degree(); ++i)
          for (int j = 0; j <= tb.degree(); ++j) Traits::fma(t.c[i + j], ta.c[i], tb.c[j]);
      }
    }
  }

  /// d/dY.
  ExpPoly derivative() const {
    ExpPoly out;
    for (const auto& t : terms_) {
      Term n{t.lambda, {}};
      const int d = t.degree();
      n.c.assign(d + 1, Traits::zero_like(t.c[0]));
      for (int p = 0; p <= d; ++p) {
        n.c[p] = t.lambda * t.c[p];
        if (p + 1 <= d) n.c[p] = n.c[p] + double(p + 1) * t.c[p + 1];
      }
      if (t.lambda == cd(0.0)) {
        if (d == 0) continue;
        n.c.pop_back();
      }
      out.terms_.push_back(std::move(n));
    }
    return out;
  }

  /// Complex conjugate: conjugates exponents and coefficients.
  ExpPoly conj() const {
    ExpPoly out = *this;
    for (auto& t : out.terms_) {
      t.lambda = std::conj(t.lambda);
      for (auto& c : t.c) c = Traits::conj(c);
    }
    return out.normalize();
  }

  /// Apply an arbitrary linear map to every coefficient (slow derivatives,
  /// interpolation, ...).
  ExpPoly map_coefs(const std::function<C(const C&)>& f) const {
    ExpPoly out = *this;
    for (auto& t : out.terms_)
      for (auto& c : t.c) c = f(c);
    return out;
  }

  // ---- evaluation and integrals ---------------------------------------

  C eval(double Y) const {
    if (terms_.empty()) return C{};
    C acc = Traits::zero_like(terms_[0].c[0]);
    for (const auto& t : terms_) {
      const cd e = std::exp(t.lambda * Y);
      cd yp = e;
      for (int p = 0; p <= t.degree(); ++p) {
        Traits::axpy(acc, yp, t.c[p]);
        yp *= Y;
      }
    }
    return acc;
  }

  C value_at_zero() const {
    if (terms_.empty()) return C{};
    C acc = Traits::zero_like(terms_[0].c[0]);
    for (const auto& t : terms_) acc = acc + t.c[0];
    return acc;
  }

  /// Exact integral over (0, infinity); all exponents must have Re < 0.
  C integral_zero_inf() const {
    if (terms_.empty()) return C{};
    C acc = Traits::zero_like(terms_[0].c[0]);
    for (const auto& t : terms_) {
      require_decay(t.lambda, "integral_zero_inf");
      // int_0^inf Y^p e^{l Y} dY = p! / (-l)^{p+1}
      cd w = -1.0 / t.lambda;
      for (int p = 0; p <= t.degree(); ++p) {
        Traits::axpy(acc, w, t.c[p]);
        w *= double(p + 1) / (-t.lambda);
      }
    }
    return acc;
  }

  /// Single tail  int_Y^inf f(s) ds.
  ExpPoly tail() const {
    ExpPoly out;
    for (const auto& t : terms_) {
      require_decay(t.lambda, "tail_integral");
      Term n{t.lambda, particular_poly(t.c, t.lambda)};
      for (auto& c : n.c) c = -c;
      out.terms_.push_back(std::move(n));
    }
    return out;
  }

  /// Double tail  -int_Y^inf int_s^inf f(z) dz ds; d^2/dY^2 of it is -f.
  ExpPoly double_tail() const { return -(tail().tail()); }

  /// Solution of (d/dY - mu) u = f with u(0) = 0 (from_zero) or with u the
  /// decaying solution anchored at infinity (requires Re(lambda - mu) < 0).
  ExpPoly duhamel(cd mu, bool from_zero) const {
    ExpPoly out;
    std::vector<C> hom;  // coefficient of the homogeneous e^{mu Y} correction
    for (const auto& t : terms_) {
      const cd delta = t.lambda - mu;
      Term n{t.lambda, {}};
      if (same_exponent(t.lambda, mu)) {
        if (!from_zero) throw DivergenceError("duhamel: resonant term anchored at infinity");
        // q' = p: integrate the polynomial with q(0) = 0.
        n.lambda = mu;
        n.c.assign(t.degree() + 2, Traits::zero_like(t.c[0]));
        for (int p = 0; p <= t.degree(); ++p) n.c[p + 1] = t.c[p] / double(p + 1);
        if (n.degree() > degree_cap) {
          throw DegreeOverflowError("ExpPoly::duhamel: degree exceeds cap");
        }
      } else {
        if (!from_zero && !(delta.real() < 0.0)) {
          throw DivergenceError("duhamel: integral from infinity diverges");
        }
        n.c = particular_poly(t.c, delta);
        if (from_zero) {
          if (hom.empty()) hom.push_back(Traits::zero_like(t.c[0]));
          hom[0] = hom[0] - n.c[0];
        }
      }
      out.terms_.push_back(std::move(n));
    }
    if (!hom.empty()) out.terms_.push_back(Term{mu, std::move(hom)});
    return out.normalize();
  }

 private:
  std::vector<Term> terms_;

  /// Term with exponent lambda (created if absent) of degree at least deg.
  Term& slot(cd lambda, int deg, const C& like) {
    for (auto& t : terms_) {
      if (same_exponent(t.lambda, lambda)) {
        if (t.degree() < deg) t.c.resize(deg + 1, Traits::zero_like(like));
        return t;
      }
    }
    terms_.push_back(Term{lambda, std::vector<C>(deg + 1, Traits::zero_like(like))});
    return terms_.back();
  }

  static void require_decay(cd lambda, const char* what) {
    if (!(lambda.real() < 0.0)) {
      throw DivergenceError(std::string(what) + ": term with Re(lambda) >= 0");
    }
  }

  /// Polynomial q with q' + delta q = p (delta != 0), via back substitution.
  static std::vector<C> particular_poly(const std::vector<C>& p, cd delta) {
    const int d = int(p.size()) - 1;
    std::vector<C> qv(p.size(), Traits::zero_like(p[0]));
    qv[d] = p[d] / delta;
    for (int m = d - 1; m >= 0; --m) qv[m] = (p[m] - double(m + 1) * qv[m + 1]) / delta;
    return qv;
  }

  static void merge_into(Term& dst, Term&& src) {
    if (src.c.size() > dst.c.size()) std::swap(dst.c, src.c);
    for (std::size_t p = 0; p < src.c.size(); ++p) dst.c[p] = dst.c[p] + src.c[p];
  }

  void check_degree() const {
    for (const auto& t : terms_) {
      if (t.degree() > degree_cap) {
        throw DegreeOverflowError("ExpPoly: degree " + std::to_string(t.degree()) +
                                  " exceeds cap " + std::to_string(degree_cap));
      }
    }
  }
};

using ExpPolyC = ExpPoly<cd>;
using ExpPolyA = ExpPoly<SlowArray>;

}  // namespace rwave
