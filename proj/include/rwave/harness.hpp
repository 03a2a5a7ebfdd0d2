#pragma once

/// @file harness.hpp
/// @brief Scenario files and the end-to-end pipelines behind the command line
/// tool: dispersion report, amplitude-equation checks, cascade construction,
/// residual-order scans, comparison with the finite-difference solution of
/// the full problem, and the norm scaling identity.
///
/// A scenario is a JSON document overlaid on the defaults of the checked-in
/// schema (scenarios/schema.json). Every pipeline returns a Verdict: a list
/// of named checks (value, comparison, limit) with the thresholds taken from
/// the scenario's "thresholds" block. Tables are written as CSV, verdicts as
/// JSON, each command into its own directory.

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <complex>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "rwave/amplitude.hpp"
#include "rwave/assemble.hpp"
#include "rwave/cascade.hpp"
#include "rwave/diagnostics.hpp"
#include "rwave/dispersion.hpp"
#include "rwave/errors.hpp"
#include "rwave/svk_fd.hpp"

namespace rwave::harness {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Verdicts
// ---------------------------------------------------------------------------

/// One named pass/fail check: `value op limit`.
struct Check {
  std::string name;
  double value = 0.0;
  std::string op;  ///< "<", "<=", ">", ">=", "==" or "in" (limit +- tol)
  double limit = 0.0;
  double tol = 0.0;
  bool pass = false;
  std::string note;

  static Check make(std::string name, double value, std::string op, double limit, double tol = 0.0) {
    Check c{std::move(name), value, std::move(op), limit, tol, false, {}};
    if (c.op == "<") c.pass = value < limit;
    else if (c.op == "<=") c.pass = value <= limit;
    else if (c.op == ">") c.pass = value > limit;
    else if (c.op == ">=") c.pass = value >= limit;
    else if (c.op == "==") c.pass = value == limit;
    else if (c.op == "in") c.pass = std::abs(value - limit) <= tol;
    else throw ConfigError("check: unknown comparison '" + c.op + "'");
    if (!std::isfinite(value)) c.pass = false;
    return c;
  }
  static Check failed(std::string name, std::string note) {
    Check c{std::move(name), std::numeric_limits<double>::quiet_NaN(), "error", 0.0, 0.0, false,
            std::move(note)};
    return c;
  }
  std::string describe() const {
    std::ostringstream s;
    s.precision(4);
    s << std::scientific << name << " = " << value;
    if (op == "in") s << " in " << limit << " +- " << tol;
    else if (op != "error") s << " " << op << " " << limit;
    if (!note.empty()) s << " (" << note << ")";
    return s.str();
  }
};

struct Verdict {
  std::string command;
  std::vector<Check> checks;
  json info = json::object();
  double seconds = 0.0;

  bool pass() const {
    return !checks.empty() &&
           std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
  }
  Check& add(Check c) {
    checks.push_back(std::move(c));
    return checks.back();
  }
  const Check* find(const std::string& name) const {
    for (const auto& c : checks)
      if (c.name == name) return &c;
    return nullptr;
  }
  json to_json() const {
    json j;
    j["command"] = command;
    j["pass"] = pass();
    j["seconds"] = seconds;
    j["checks"] = json::array();
    for (const auto& c : checks) {
      json e{{"name", c.name}, {"op", c.op}, {"limit", c.limit}, {"pass", c.pass}};
      e["value"] = std::isfinite(c.value) ? json(c.value) : json(nullptr);
      if (c.op == "in") e["tol"] = c.tol;
      if (!c.note.empty()) e["note"] = c.note;
      j["checks"].push_back(e);
    }
    j["info"] = info;
    return j;
  }
};

// ---------------------------------------------------------------------------
// Scenarios
// ---------------------------------------------------------------------------

/// Reject keys that the defaults do not know (typos would otherwise be
/// silently ignored). Arrays and null defaults accept any content.
inline void check_keys(const json& defaults, const json& given, const std::string& path) {
  if (!given.is_object() || !defaults.is_object()) return;
  for (auto it = given.begin(); it != given.end(); ++it) {
    if (!defaults.contains(it.key())) {
      throw ConfigError("scenario: unknown key '" + path + it.key() + "'");
    }
    check_keys(defaults.at(it.key()), it.value(), path + it.key() + ".");
  }
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  try {
    return json::parse(in, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ConfigError("'" + path + "': " + e.what());
  }
}

/// Boundary forcing (f, g)(t, x, theta) = A chi(t) w(x) sum_n (f_n, g_n) cos(n theta).
struct ForcingSpec {
  struct Mode {
    int n = 1;
    double f = 0.0, g = 0.0;
  };
  double amplitude = 1.0;
  std::vector<Mode> modes;
  std::string envelope = "exp_cos";  ///< "exp_cos": e^{cos(2 pi x / Lx) - 1}; "uniform": 1
  std::string ramp = "exp";          ///< "exp": e^{-1/t}; "bump": compact bump on (0, ramp_tf)
  double ramp_tf = 0.6;
  double Lx = 2.0 * std::numbers::pi;

  double chi(double t) const {
    if (t <= 0.0) return 0.0;
    if (ramp == "exp") return std::exp(-1.0 / t);
    if (t >= ramp_tf) return 0.0;
    return std::exp(-1.0 / t - 1.0 / (ramp_tf - t) + 4.0 / ramp_tf);
  }
  double envelope_at(double x) const {
    if (envelope == "uniform") return 1.0;
    return std::exp(std::cos(2.0 * std::numbers::pi * x / Lx) - 1.0);
  }
  std::array<double, 2> operator()(double t, double x, double theta) const {
    const double a = amplitude * chi(t);
    if (a == 0.0) return {0.0, 0.0};
    const double w = a * envelope_at(x);
    std::array<double, 2> out{0.0, 0.0};
    for (const auto& m : modes) {
      const double c = std::cos(m.n * theta);
      out[0] += w * m.f * c;
      out[1] += w * m.g * c;
    }
    return out;
  }
  int max_mode() const {
    int n = 0;
    for (const auto& m : modes) n = std::max(n, m.n);
    return n;
  }
};

/// A parsed scenario: the merged document plus typed accessors.
class Scenario {
 public:
  Scenario() = default;

  /// Overlay `doc` on the defaults and validate.
  static Scenario from_json(const json& defaults, const json& doc) {
    check_keys(defaults, doc, "");
    Scenario s;
    s.j_ = defaults;
    s.j_.merge_patch(doc);
    s.validate();
    return s;
  }
  static Scenario load(const std::string& schema_path, const std::string& scenario_path) {
    const json schema = read_json_file(schema_path);
    if (!schema.contains("defaults")) throw ConfigError("schema: missing 'defaults'");
    return from_json(schema.at("defaults"), scenario_path.empty() ? json::object()
                                                                   : read_json_file(scenario_path));
  }

  const json& doc() const { return j_; }
  json& doc() { return j_; }

  template <class T>
  T get(const std::string& pointer) const {
    try {
      return j_.at(json::json_pointer(pointer)).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError("scenario: '" + pointer + "': " + e.what());
    }
  }
  double threshold(const std::string& group, const std::string& name) const {
    return get<double>("/thresholds/" + group + "/" + name);
  }

  double r() const { return get<double>("/medium/r"); }
  std::vector<double> eps() const { return get<std::vector<double>>("/eps"); }
  std::uint64_t seed() const { return get<std::uint64_t>("/seed"); }

  ForcingSpec forcing() const {
    ForcingSpec f;
    f.amplitude = get<double>("/forcing/amplitude");
    f.envelope = get<std::string>("/forcing/envelope");
    f.ramp = get<std::string>("/forcing/ramp");
    f.ramp_tf = get<double>("/forcing/ramp_tf");
    f.Lx = get<double>("/cascade/Lx");
    for (const auto& m : j_.at("forcing").at("modes")) {
      f.modes.push_back({m.at("n").get<int>(), m.value("f", 0.0), m.value("g", 0.0)});
    }
    return f;
  }

  CascadeConfig cascade_config() const {
    CascadeConfig c;
    c.r = r();
    c.order = get<int>("/cascade/order");
    c.ntheta = get<int>("/cascade/ntheta");
    c.grid = SlowGrid{get<int>("/cascade/nt"), get<int>("/cascade/nx"), get<double>("/cascade/T"),
                      get<double>("/cascade/Lx")};
    c.solvability_tol = threshold("cascade", "gate");
    c.enforce_solvability = get<bool>("/cascade/enforce_solvability");
    return c;
  }

 private:
  void validate() const {
    if (!(r() > 1.0)) throw ConfigError("scenario: medium.r must be > 1");
    const auto e = eps();
    if (e.size() < 3) throw ConfigError("scenario: need at least 3 eps values for slope fits");
    for (std::size_t i = 0; i < e.size(); ++i) {
      if (!(e[i] > 0.0)) throw ConfigError("scenario: eps values must be positive");
      if (i && !(e[i] < e[i - 1])) throw ConfigError("scenario: eps list must be strictly decreasing");
    }
    const int N = get<int>("/cascade/order");
    if (N < 2 || N > 5) throw ConfigError("scenario: cascade.order must be in 2..5");
    const int nth = get<int>("/cascade/ntheta");
    const auto f = forcing();
    if (f.ramp != "exp" && f.ramp != "bump") throw ConfigError("scenario: forcing.ramp must be exp|bump");
    if (f.envelope != "exp_cos" && f.envelope != "uniform") {
      throw ConfigError("scenario: forcing.envelope must be exp_cos|uniform");
    }
    for (const auto& m : f.modes) {
      if (m.n < 0 || m.n > nth) throw ConfigError("scenario: forcing mode outside 0..ntheta");
      if (m.n == 0 && !get<bool>("/forcing/allow_mean")) {
        throw ConfigError("scenario: forcing has a theta-mean part (set forcing.allow_mean to override)");
      }
    }
  }

  json j_;
};

/// Run-time options shared by all commands.
struct RunOptions {
  std::string out_dir;  ///< empty: write nothing
  int threads = 1;
};

inline std::string prepare_dir(const RunOptions& o, const std::string& command) {
  if (o.out_dir.empty()) return {};
  const auto dir = std::filesystem::path(o.out_dir) / command;
  std::filesystem::create_directories(dir);
  return dir.string();
}

inline void emit_verdict(const std::string& dir, const Verdict& v) {
  if (!dir.empty()) write_json(dir + "/verdict.json", v.to_json());
}

/// Run f(0..n-1) on up to `threads` threads; the first exception is rethrown.
template <class F>
void parallel_for(int n, int threads, F&& f) {
  threads = std::clamp(threads, 1, std::max(1, n));
  if (threads == 1) {
    for (int i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr err;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (int w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      for (int i = next++; i < n; i = next++) {
        try {
          f(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(mu);
          if (!err) err = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (err) std::rethrow_exception(err);
}

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
  }

 private:
  std::chrono::steady_clock::time_point t0_ = std::chrono::steady_clock::now();
};

// ---------------------------------------------------------------------------
// dispersion
// ---------------------------------------------------------------------------

struct DispersionRow {
  double r = 0.0, c = 0.0, omega1 = 0.0, omega2 = 0.0, q = 0.0;
  double relation = 0.0;  ///< |2 - c^2 - 2 q|
  double det = 0.0;       ///< |det B_Lop|
  double ker = 0.0;       ///< |B_Lop (omega2, -q)^T|
  double coker = 0.0;     ///< |(q, omega2) B_Lop|
};

inline DispersionRow dispersion_row(double r) {
  const RayleighData d = RayleighData::make(r);
  DispersionRow row;
  row.r = r;
  row.c = d.c;
  row.omega1 = d.decay(1);
  row.omega2 = d.decay(2);
  row.q = d.q;
  row.relation = std::abs(2.0 - d.c * d.c - 2.0 * d.q);
  row.det = std::abs(d.B_lop.determinant());
  row.ker = (d.B_lop * d.ker_vec).norm();
  row.coker = (d.coker_vec.transpose() * d.B_lop).norm();
  return row;
}

inline Verdict run_dispersion(const std::vector<double>& rs, const Scenario& s, const RunOptions& o) {
  Stopwatch sw;
  Verdict v;
  v.command = "dispersion";
  for (double r : rs)
    if (!(r > 1.0)) throw ConfigError("dispersion: r must be > 1 (got " + std::to_string(r) + ")");
  const double t_rel = s.threshold("dispersion", "relation"), t_det = s.threshold("dispersion", "det"),
               t_null = s.threshold("dispersion", "null");
  std::vector<std::vector<double>> rows;
  for (double r : rs) {
    const DispersionRow d = dispersion_row(r);
    rows.push_back({d.r, d.c, d.omega1, d.omega2, d.q, d.relation, d.det, d.ker, d.coker});
    std::ostringstream tag;
    tag << "r=" << r;
    v.add(Check::make(tag.str() + " c", d.c, "in", 0.5, 0.5 - 1e-15));
    v.add(Check::make(tag.str() + " |2-c^2-2q|", d.relation, "<", t_rel));
    v.add(Check::make(tag.str() + " |det B|", d.det, "<", t_det));
    v.add(Check::make(tag.str() + " |B ker|", d.ker, "<", t_null));
    v.add(Check::make(tag.str() + " |coker B|", d.coker, "<", t_null));
    const RayleighData rd = RayleighData::make(r);
    json e;
    e["c"] = d.c;
    e["omega1"] = d.omega1;
    e["omega2"] = d.omega2;
    e["q"] = d.q;
    e["B_lop_re"] = {{rd.B_lop(0, 0).real(), rd.B_lop(0, 1).real()}, {rd.B_lop(1, 0).real(), rd.B_lop(1, 1).real()}};
    e["B_lop_im"] = {{rd.B_lop(0, 0).imag(), rd.B_lop(0, 1).imag()}, {rd.B_lop(1, 0).imag(), rd.B_lop(1, 1).imag()}};
    e["ker_vec"] = {"omega2", "-q"};
    e["coker_vec"] = {"q", "omega2"};
    v.info["r=" + std::to_string(r)] = e;
  }
  v.seconds = sw.seconds();
  const auto dir = prepare_dir(o, "dispersion");
  if (!dir.empty()) {
    write_csv(dir + "/dispersion.csv",
              {"r", "c", "omega1", "omega2", "q", "relation_residual", "det_residual", "ker_residual",
               "coker_residual"},
              rows);
  }
  emit_verdict(dir, v);
  return v;
}

// ---------------------------------------------------------------------------
// amplitude
// ---------------------------------------------------------------------------

/// Direct-summation oracle for B(a, b) at all grid points and modes.
inline double bilinear_oracle_error(const AmplitudeOps& ops, const Eigen::MatrixXcd& a,
                                    const Eigen::MatrixXcd& b, const Kernel& k) {
  const auto& g = ops.grid();
  const auto B = ops.to_phys(bilinear_B(ops, a, b, k));
  const auto ap = ops.to_phys(a), bp = ops.to_phys(b);
  double err = 0.0;
  for (int j = 0; j < g.nx; ++j)
    for (int n = 0; n <= g.ntheta; ++n) {
      cd s = 0.0;
      for (int np = -g.ntheta; np <= g.ntheta; ++np) {
        const int n1 = n - np;
        if (std::abs(n1) > g.ntheta) continue;
        s += k.eval(-n, n1, np) * AmplitudeOps::mode(ap, j, n1) * AmplitudeOps::mode(bp, j, np);
      }
      s *= -1.0 / (4.0 * std::numbers::pi * k.c0);
      err = std::max(err, std::abs(B(j, n) - s));
    }
  return err;
}

/// Smooth random amplitude with modes 1..nmodes (1/n^2 decay) and a small mean.
inline Eigen::MatrixXcd random_amplitude(const AmplitudeOps& ops, std::mt19937_64& rng, int nmodes) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const auto& g = ops.grid();
  Eigen::MatrixXcd a = ops.zeros();
  const double kx1 = 2.0 * std::numbers::pi / g.Lx;
  for (int n = 1; n <= std::min(nmodes, g.ntheta); ++n) {
    const cd c0(u(rng), u(rng)), c1(u(rng), u(rng));
    const double s1 = u(rng);
    for (int j = 0; j < g.nx; ++j) {
      const double x = kx1 * g.x(j);
      a(j, n) = (c0 * std::exp(std::sin(x + s1)) + c1 * std::cos(2.0 * x)) / double(n * n);
    }
  }
  for (int j = 0; j < g.nx; ++j) a(j, 0) = 0.3 * u(rng) * std::cos(kx1 * g.x(j));
  Eigen::MatrixXcd ah = ops.to_spec(a);
  ops.dealias(ah);
  return ah;
}

inline Verdict run_amplitude(const Scenario& s, const RunOptions& o) {
  Stopwatch sw;
  Verdict v;
  v.command = "amplitude";
  const auto dir = prepare_dir(o, "amplitude");
  AmplitudeGrid g;
  g.Lx = s.get<double>("/cascade/Lx");
  g.nx = s.get<int>("/amplitude/nx");
  g.ntheta = s.get<int>("/amplitude/ntheta");
  const double c = s.get<double>("/amplitude/speed");
  const Kernel K = Kernel::reference(s.get<double>("/amplitude/kappa"), s.get<double>("/amplitude/c0"));
  const Multiplier HB = Multiplier::from_kernel(K, g.ntheta);
  const AmplitudeOps ops(g);
  const double kx1 = 2.0 * std::numbers::pi / g.Lx;

  // (a) zero forcing with the nonlinear kernel stays exactly zero.
  {
    AmplitudeSolver solver(g, c, HB);
    auto G = [](double, Eigen::MatrixXcd&) {};
    const auto h = solver.run(G, {0.5, 1.0});
    v.add(Check::make("zero forcing: max|alpha|", solver.max_abs_phys(h.back().a_hat), "<",
                      s.threshold("amplitude", "zero_max")));
  }
  // (b) kernel 0: transport with forcing t e^{cos x} on modes 1 and 2. By
  // characteristics, alpha(t, x) = int_0^t s e^{cos(x - c (t - s))} ds,
  // evaluated with Gauss-Legendre quadrature.
  {
    AmplitudeOptions opt;
    opt.dt_max = s.get<double>("/amplitude/transport_dt");
    AmplitudeSolver solver(g, c, Multiplier::zero(g.ntheta), opt);
    auto G = [&](double t, Eigen::MatrixXcd& out) {
      for (int j = 0; j < g.nx; ++j) {
        const double e = std::exp(std::cos(kx1 * g.x(j)));
        out(j, 1) = t * e;
        out(j, 2) = cd(0.0, 0.5) * t * e;
      }
    };
    const double T = 1.0;
    const auto a = solver.ops().to_phys(solver.run(G, {T}).back().a_hat);
    // 40-point Gauss-Legendre nodes on [0, T] by Newton on P_40.
    const int nq = 40;
    std::vector<double> xq(nq), wq(nq);
    for (int i = 0; i < nq; ++i) {
      double z = std::cos(std::numbers::pi * (i + 0.75) / (nq + 0.5)), dp = 0.0;
      for (int it = 0; it < 100; ++it) {
        double p0 = 1.0, p1 = z;
        for (int k = 2; k <= nq; ++k) {
          const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
          p0 = p1;
          p1 = p2;
        }
        dp = nq * (z * p1 - p0) / (z * z - 1.0);
        const double dz = p1 / dp;
        z -= dz;
        if (std::abs(dz) < 1e-16) break;
      }
      xq[i] = 0.5 * T * (z + 1.0);
      wq[i] = T / ((1.0 - z * z) * dp * dp);
    }
    double err = 0.0;
    for (int j = 0; j < g.nx; ++j) {
      double ref = 0.0;
      for (int i = 0; i < nq; ++i) ref += wq[i] * xq[i] * std::exp(std::cos(kx1 * (g.x(j) - c * (T - xq[i]))));
      err = std::max({err, std::abs(a(j, 1) - ref), std::abs(a(j, 2) - cd(0.0, 0.5) * ref)});
    }
    v.add(Check::make("kernel 0: |alpha - characteristics|", err, "<",
                      s.threshold("amplitude", "transport")));
  }
  std::mt19937_64 rng(s.seed());
  // (c) bilinear_B against direct summation.
  {
    const auto a = random_amplitude(ops, rng, g.ntheta), b = random_amplitude(ops, rng, g.ntheta);
    v.add(Check::make("bilinear_B vs direct summation", bilinear_oracle_error(ops, a, b, K), "<",
                      s.threshold("amplitude", "bilinear")));
  }
  // (d) tame ratios after a forcing pulse, for each Sobolev index m.
  {
    AmplitudeSolver solver(g, c, HB);
    const double tf = s.get<double>("/amplitude/pulse_end"), T = s.get<double>("/amplitude/T");
    const double A = s.get<double>("/amplitude/pulse_amplitude");
    const double A2 = s.get<double>("/amplitude/pulse_second_harmonic");
    auto G = [&](double t, Eigen::MatrixXcd& out) {
      if (t <= 0.0 || t >= tf) return;
      const double chi = A * std::exp(-1.0 / t - 1.0 / (tf - t) + 4.0 / tf);
      for (int j = 0; j < g.nx; ++j) {
        const double x = kx1 * g.x(j);
        out(j, 1) = chi * std::exp(std::cos(x) - 1.0);
        out(j, 2) = cd(0.0, A2) * chi * std::exp(std::cos(x + 1.0) - 1.0);
      }
    };
    const int nrec = s.get<int>("/amplitude/records");
    std::vector<double> rec;
    for (int i = 0; i < nrec; ++i) rec.push_back(tf + (T - tf) * (i + 1.0) / nrec);
    const auto hist = solver.run(G, rec);
    const double m1 = s.get<double>("/amplitude/tame_m1");
    std::vector<double> bounds;
    std::vector<std::vector<double>> rows;
    for (double m : s.get<std::vector<double>>("/amplitude/tame_m")) {
      const auto ratios = tame_monitor(solver.ops(), hist, m, m1);
      double b = 0.0;
      for (std::size_t i = 0; i < ratios.size(); ++i) {
        b = std::max(b, ratios[i]);
        rows.push_back({m, hist[i + 1].t, ratios[i]});
      }
      bounds.push_back(b);
      v.info["tame_bound_m" + std::to_string(int(m))] = b;
    }
    const double hi = *std::max_element(bounds.begin(), bounds.end());
    const double lo = *std::min_element(bounds.begin(), bounds.end());
    v.info["tame_common_constant"] = hi;
    v.add(Check::make("tame ratio bound spread over m", lo > 0.0 ? hi / lo : INFINITY, "<=",
                      s.threshold("amplitude", "tame_spread")));
    v.info["final_max_abs"] = solver.max_abs_phys(hist.back().a_hat);
    if (!dir.empty()) {
      write_csv(dir + "/tame.csv", {"m", "t", "ratio"}, rows);
      std::vector<std::vector<double>> spec;
      for (const auto& r : hist)
        for (int n = 0; n <= g.ntheta; ++n) {
          double e = 0.0;
          for (int mm = 0; mm < g.nx; ++mm) e += std::norm(r.a_hat(mm, n));
          spec.push_back({r.t, double(n), std::sqrt(e)});
        }
      write_csv(dir + "/spectrum.csv", {"t", "n", "l2_of_mode"}, spec);
      save_amplitude_snapshot(dir + "/final.snapshot", g, SpectralState{hist.back().a_hat, hist.back().t});
    }
  }
  // (e) cancellation ratio over random draws.
  {
    const int draws = s.get<int>("/amplitude/cancellation_draws");
    const double m1 = s.get<double>("/amplitude/cancellation_m1");
    double worst = 0.0;
    std::vector<std::vector<double>> rows;
    for (int d = 0; d < draws; ++d) {
      const auto u = random_amplitude(ops, rng, g.ntheta / 2), w = random_amplitude(ops, rng, g.ntheta / 2);
      const double q = cancellation_ratio(ops, HB, u, w, m1);
      worst = std::max(worst, std::isfinite(q) ? q : INFINITY);
      rows.push_back({double(d), q});
    }
    v.add(Check::make("cancellation ratio max over draws", worst, "<",
                      s.threshold("amplitude", "cancellation_max")));
    if (!dir.empty()) write_csv(dir + "/cancellation.csv", {"draw", "ratio"}, rows);
  }
  v.seconds = sw.seconds();
  emit_verdict(dir, v);
  return v;
}

// ---------------------------------------------------------------------------
// cascade
// ---------------------------------------------------------------------------

inline Cascade build_cascade(const Scenario& s) {
  const CascadeConfig cc = s.cascade_config();
  const ForcingSpec f = s.forcing();
  Cascade cas(cc, BoundaryForcing::sample(cc.grid, cc.ntheta, f));
  cas.build();
  return cas;
}

/// Criterion checks on a built cascade (profile equations and gates).
inline void cascade_checks(const Cascade& cas, const Scenario& s, Verdict& v) {
  const double t_int = s.threshold("cascade", "interior"), t_bnd = s.threshold("cascade", "boundary"),
               t_gate = s.threshold("cascade", "gate");
  double u2 = 0.0;
  for (const auto& f : cas.profile(2).base) u2 = std::max(u2, f.max_abs());
  v.add(Check::make("U2 non-alpha part max", u2, "==", 0.0));
  for (const auto& r : cas.reports()) {
    const std::string k = "k=" + std::to_string(r.k);
    v.add(Check::make(k + " L_ff residual (rel)", r.interior_residual, "<", t_int));
    v.add(Check::make(k + " l_f residual (rel)", r.boundary_residual, "<", t_bnd));
    v.add(Check::make(k + " gate (a) mean part", r.cond_a, "<", t_gate));
    v.add(Check::make(k + " gate (b) mode-0 balance", r.cond_b, "<", t_gate));
    v.add(Check::make(k + " gate (c) cokernel pairing", r.cond_c, "<", t_gate));
    if (r.alpha_max > 0.0) {
      v.add(Check::make(k + " negative control (alpha zeroed)", r.negative_control, ">", t_gate));
    }
  }
}

inline Verdict run_cascade(const Scenario& s, const RunOptions& o, Cascade* keep = nullptr) {
  Stopwatch sw;
  Verdict v;
  v.command = "cascade";
  const auto dir = prepare_dir(o, "cascade");
  try {
    Cascade cas = build_cascade(s);
    cascade_checks(cas, s, v);
    std::vector<std::vector<double>> rows;
    for (const auto& r : cas.reports()) {
      rows.push_back({double(r.k), r.interior_residual, r.boundary_residual, r.cond_a, r.cond_b, r.cond_c,
                      r.negative_control, r.mean_boundary, double(r.mean_solved), r.alpha_max, r.profile_max,
                      r.seconds});
    }
    v.info["speed"] = cas.rayleigh().c;
    v.info["derived_speed"] = cas.coefficients().speed;
    v.info["speed_spread"] = cas.coefficients().speed_spread;
    if (!dir.empty()) {
      write_csv(dir + "/orders.csv",
                {"k", "interior_residual", "boundary_residual", "cond_a", "cond_b", "cond_c",
                 "negative_control", "mean_boundary", "mean_solved", "alpha_max", "profile_max", "seconds"},
                rows);
      if (s.get<bool>("/cascade/save")) cas.save(dir + "/cascade.bin");
    }
    if (keep) *keep = std::move(cas);
  } catch (const SolvabilityError& e) {
    v.add(Check::failed("solvability gate", e.what()));
  }
  v.seconds = sw.seconds();
  emit_verdict(dir, v);
  return v;
}

// ---------------------------------------------------------------------------
// residual
// ---------------------------------------------------------------------------

struct ResidualRow {
  double eps = 0.0;
  double interior = 0.0, boundary = 0.0;              ///< sup-norms at step h
  double interior_floor = 0.0, boundary_floor = 0.0;  ///< |scan(h) - scan(h/2)|
  double interior_l2 = 0.0, boundary_l2 = 0.0;
  double field_max = 0.0;
};

/// Residual sup-norms of the order-N approximation at one eps. The probe
/// step is h = h_rel eps; the discretization floor is the change of the scan
/// when the step is halved.
inline ResidualRow residual_at(const Cascade& cas, const Scenario& s, double eps) {
  const ForcingSpec f = s.forcing();
  const int N = cas.config().order;
  const ApproxField A(cas, eps, N);
  const FieldEval U = A.as_eval();
  const double c = cas.rayleigh().c;
  TractionEval tau = [&](double t, double x) {
    const auto g = f(t, x, (x - c * t) / eps);
    return std::array<double, 2>{eps * eps * g[0], eps * eps * g[1]};
  };
  const double t = s.get<double>("/residual/t"), Lx = cas.config().grid.Lx;
  const int nx = s.get<int>("/residual/nx"), ny = s.get<int>("/residual/ny");
  const double dy = s.get<double>("/residual/y_step") * eps, h = s.get<double>("/residual/h") * eps;
  std::vector<double> xs, ys;
  for (int i = 0; i < nx; ++i) xs.push_back(Lx * i / nx);
  for (int j = 0; j < ny; ++j) ys.push_back(j * dy);
  const auto a = residual_scan(cas.flux(), U, tau, {t}, xs, ys, h, h);
  const auto b = residual_scan(cas.flux(), U, tau, {t}, xs, ys, h / 2, h / 2);
  ResidualRow r;
  r.eps = eps;
  r.interior = a.interior_sup;
  r.boundary = a.boundary_sup;
  r.interior_l2 = a.interior_l2;
  r.boundary_l2 = a.boundary_l2;
  r.interior_floor = std::abs(a.interior_sup - b.interior_sup);
  r.boundary_floor = std::abs(a.boundary_sup - b.boundary_sup);
  for (double x : xs)
    for (double y : ys) {
      const auto u = A(t, x, y);
      r.field_max = std::max(r.field_max, std::hypot(u[0], u[1]));
    }
  return r;
}

inline Verdict run_residual(const Scenario& s, const RunOptions& o) {
  Stopwatch sw;
  Verdict v;
  v.command = "residual";
  const auto dir = prepare_dir(o, "residual");
  const auto eps = s.eps();
  Cascade cas = build_cascade(s);
  const int N = cas.config().order;
  std::vector<ResidualRow> rows(eps.size());
  parallel_for(int(eps.size()), o.threads, [&](int i) { rows[i] = residual_at(cas, s, eps[i]); });
  std::vector<double> vi, vb;
  std::vector<std::vector<double>> table;
  const double ff = s.threshold("residual", "floor_factor");
  for (const auto& r : rows) {
    vi.push_back(r.interior);
    vb.push_back(r.boundary);
    table.push_back({r.eps, r.interior, r.interior_floor, r.interior_l2, r.boundary, r.boundary_floor,
                     r.boundary_l2, r.field_max});
    std::ostringstream e;
    e << "eps=" << r.eps;
    v.add(Check::make(e.str() + " interior / floor", r.interior / std::max(r.interior_floor, 1e-300), ">=", ff));
    v.add(Check::make(e.str() + " boundary / floor", r.boundary / std::max(r.boundary_floor, 1e-300), ">=", ff));
  }
  const double tol = s.threshold("residual", "slope_tol");
  const SlopeFit fi = slope_fit(eps, vi), fb = slope_fit(eps, vb);
  v.add(Check::make("interior residual slope", fi.slope, "in",
                    N + s.threshold("residual", "interior_order_offset"), tol));
  v.add(Check::make("boundary residual slope", fb.slope, "in",
                    N + s.threshold("residual", "boundary_order_offset"), tol));
  v.info["order"] = N;
  v.info["interior_r2"] = fi.r2;
  v.info["boundary_r2"] = fb.r2;
  v.seconds = sw.seconds();
  if (!dir.empty()) {
    write_csv(dir + "/residual.csv",
              {"eps", "interior_sup", "interior_floor", "interior_l2", "boundary_sup", "boundary_floor",
               "boundary_l2", "field_max"},
              table);
  }
  emit_verdict(dir, v);
  return v;
}

// ---------------------------------------------------------------------------
// compare
// ---------------------------------------------------------------------------

struct CompareRow {
  double eps = 0.0;
  double u_max = 0.0;             ///< max |u^eps| on the comparison region
  double fd_estimate = 0.0;       ///< max |u_h - u_{h/2}| / 3 (error of the fine solve)
  std::vector<double> err;        ///< err[k - 2] = max |u^eps - sum_{j<=k} eps^j U_j|
  int nx = 0, ny = 0;
};

/// Finite-difference grid for one eps; refuses under-resolved settings.
inline FdGrid compare_grid(const Scenario& s, double eps, int max_mode) {
  const double ppw = s.get<double>("/compare/ppw"), min_ppw = s.get<double>("/compare/min_ppw");
  const double eff = ppw / std::max(1, max_mode);
  if (eff < min_ppw) {
    std::ostringstream m;
    m << "compare: " << eff << " points per fast wavelength of the highest forced mode (n=" << max_mode
      << ") is below the minimum " << min_ppw;
    throw ResolutionError(m.str());
  }
  FdGrid g;
  g.Lx = s.get<double>("/cascade/Lx");
  g.nx = int(std::ceil(ppw * g.Lx / (2.0 * std::numbers::pi * eps)));
  g.hy = g.hx();
  const double y_max = s.get<double>("/compare/y_max"), y_cmp = s.get<double>("/compare/y_cmp");
  if (!(y_cmp > 0.0) || y_cmp > 0.5 * y_max) {
    throw ResolutionError("compare: comparison depth must lie in (0, y_max / 2]");
  }
  g.ny = int(std::ceil(y_max / g.hy)) + 1;
  return g;
}

inline CompareRow compare_at(const Cascade& cas, const Scenario& s, double eps) {
  const ForcingSpec f = s.forcing();
  const int N = cas.config().order;
  const double c = cas.rayleigh().c, T = s.get<double>("/compare/T"), y_cmp = s.get<double>("/compare/y_cmp");
  if (T > cas.config().grid.T + 1e-12) throw ConfigError("compare: T beyond the cascade time window");
  const FdGrid gc = compare_grid(s, eps, f.max_mode());
  FdGrid gf = gc;
  gf.nx *= 2;
  gf.hy /= 2;
  gf.ny = 2 * (gc.ny - 1) + 1;
  auto solver = [&](const FdGrid& g) {
    FdConfig fc;
    fc.traction = [&f, g, c, eps](double t, std::vector<double>& tx, std::vector<double>& ty) {
      for (int i = 0; i < g.nx; ++i) {
        const double x = g.x(i);
        const auto v = f(t, x, (x - c * t) / eps);
        tx[i] = eps * eps * v[0];
        ty[i] = eps * eps * v[1];
      }
    };
    return FdSolver(g, ElasticMedium::from_ratio(cas.config().r), fc);
  };
  FdSolver sc = solver(gc), sf = solver(gf);
  const int n = FdSolver::steps_for(T, s.get<double>("/compare/cfl") * gc.hx() / std::sqrt(cas.config().r)).first;
  sc.set_dt(T / n);
  sf.set_dt(T / (2 * n));
  sc.advance_to(T);
  sf.advance_to(T);
  std::vector<ApproxField> A;
  for (int k = 2; k <= N; ++k) A.emplace_back(cas, eps, k);
  if (y_cmp > A.back().y_limit()) throw ResolutionError("compare: comparison depth beyond the mean profiles");
  CompareRow row;
  row.eps = eps;
  row.nx = gc.nx;
  row.ny = gc.ny;
  row.err.assign(N - 1, 0.0);
  for (int j = 0; gc.y(j) <= y_cmp + 1e-12; ++j)
    for (int i = 0; i < gc.nx; ++i) {
      const double x = gc.x(i), y = gc.y(j);
      std::array<double, 2> u;
      for (int q = 0; q < 2; ++q) {
        const double uc = sc.state().U(q, j, i), uf = sf.state().U(q, 2 * j, 2 * i);
        u[q] = (4.0 * uf - uc) / 3.0;
        row.fd_estimate = std::max(row.fd_estimate, std::abs(uf - uc) / 3.0);
        row.u_max = std::max(row.u_max, std::abs(u[q]));
      }
      for (int k = 2; k <= N; ++k) {
        const auto a = A[k - 2](T, x, y);
        row.err[k - 2] = std::max({row.err[k - 2], std::abs(u[0] - a[0]), std::abs(u[1] - a[1])});
      }
    }
  return row;
}

inline Verdict run_compare(const Scenario& s, const RunOptions& o) {
  Stopwatch sw;
  Verdict v;
  v.command = "compare";
  const auto dir = prepare_dir(o, "compare");
  const auto eps = s.eps();
  Cascade cas = build_cascade(s);
  const int N = cas.config().order;
  std::vector<CompareRow> rows(eps.size());
  parallel_for(int(eps.size()), o.threads, [&](int i) { rows[i] = compare_at(cas, s, eps[i]); });
  std::vector<std::string> header{"eps", "u_max", "fd_estimate", "nx", "ny"};
  for (int k = 2; k <= N; ++k) header.push_back("err_order" + std::to_string(k));
  std::vector<std::vector<double>> table;
  bool zero = true;
  for (const auto& r : rows) {
    std::vector<double> t{r.eps, r.u_max, r.fd_estimate, double(r.nx), double(r.ny)};
    t.insert(t.end(), r.err.begin(), r.err.end());
    table.push_back(t);
    zero = zero && r.u_max == 0.0 && *std::max_element(r.err.begin(), r.err.end()) == 0.0;
  }
  if (!dir.empty()) write_csv(dir + "/compare.csv", header, table);
  if (zero) {
    // Zero data: both solutions vanish identically.
    v.add(Check::make("max distance (zero forcing)", 0.0, "==", 0.0));
  } else {
    std::vector<double> slopes;
    for (int k = 2; k <= N; ++k) {
      std::vector<double> e;
      for (const auto& r : rows) e.push_back(r.err[k - 2]);
      slopes.push_back(slope_fit(eps, e).slope);
      v.info["slope_order" + std::to_string(k)] = slopes.back();
    }
    const double lead = s.threshold("compare", N >= 4 ? "leading_slope_min_refined" : "leading_slope_min");
    v.add(Check::make("slope of |u - eps^2 U2|", slopes[0], N >= 4 ? ">=" : ">", lead));
    if (N >= 3) {
      v.add(Check::make("slope increase from eps^3 U3", slopes[1] - slopes[0], ">=",
                        s.threshold("compare", "increase_min")));
    }
    const double ff = s.threshold("compare", "fd_floor_factor");
    for (const auto& r : rows) {
      std::ostringstream e;
      e << "eps=" << r.eps << " err(order " << std::min(N, 3) << ") / fd estimate";
      v.add(Check::make(e.str(), r.err[std::min(N, 3) - 2] / std::max(r.fd_estimate, 1e-300), ">=", ff));
    }
  }
  v.seconds = sw.seconds();
  emit_verdict(dir, v);
  return v;
}

// ---------------------------------------------------------------------------
// norms
// ---------------------------------------------------------------------------

/// Analytic two-scale test profiles w(T, X, Y).
inline double norm_profile(int which, double T, double X, double Y) {
  switch (which) {
    case 0: return std::cos(X - 0.9 * T) * std::exp(-Y) * (1 + Y);
    case 1: return std::sin(2 * X + 0.3 * T) * Y * Y * std::exp(-2 * Y);
    default: return std::exp(std::cos(X)) * std::cos(T) * std::exp(-Y * Y);
  }
}

/// |u(t)|_{s,k,eps} against eps^{d/2} |w(t/eps)|_{s,k,1} for u = w(t/eps,
/// x/eps, y/eps), d = 2, with the two sides sampled on unrelated grids.
/// Rows: (function, s, k, lhs, rhs, relative difference).
inline std::vector<std::array<double, 6>> norm_scaling_table(double eps, double t) {
  const int inv = int(std::lround(1.0 / eps));
  if (std::abs(inv * eps - 1.0) > 1e-12) throw ConfigError("norms: 1/eps must be an integer");
  const double pi2 = 2.0 * std::numbers::pi;
  std::vector<std::array<double, 6>> out;
  for (int which = 0; which < 3; ++which) {
    auto u = [&](double tt, double x, double y) { return norm_profile(which, tt / eps, x / eps, y / eps); };
    auto w = [&](double T, double X, double Y) { return norm_profile(which, T, X, Y); };
    const double dtu = 0.012 * eps, dtw = 0.02;
    const auto gu = GridSeries::sample(u, t - 4 * dtu, dtu, 9, pi2, inv * 96, eps / 32, 24 * 32 + 1);
    const auto gw = GridSeries::sample(w, t / eps - 4 * dtw, dtw, 9, pi2 * inv, inv * 128, 1.0 / 48, 24 * 48 + 1);
    for (const NormSpec sp : {NormSpec{0, 0, 1}, NormSpec{1, 1, 1}, NormSpec{2, 1, 1}}) {
      const double lhs = eps_norm(gu, {sp.s, sp.k, eps}, 4);
      const double rhs = eps * eps_norm(gw, {sp.s, sp.k, 1.0}, 4);
      out.push_back({double(which), double(sp.s), double(sp.k), lhs, rhs, std::abs(lhs - rhs) / rhs});
    }
  }
  return out;
}

inline Verdict run_norms(const Scenario& s, const RunOptions& o) {
  Stopwatch sw;
  Verdict v;
  v.command = "norms";
  const auto dir = prepare_dir(o, "norms");
  const auto tab = norm_scaling_table(s.get<double>("/norms/eps"), s.get<double>("/norms/t"));
  std::vector<double> worst(3, 0.0);
  std::vector<std::vector<double>> rows;
  for (const auto& r : tab) {
    worst[int(r[0])] = std::max(worst[int(r[0])], r[5]);
    rows.emplace_back(r.begin(), r.end());
  }
  for (int f = 0; f < 3; ++f) {
    v.add(Check::make("scaling identity, function " + std::to_string(f), worst[f], "<",
                      s.threshold("norms", "scaling")));
  }
  v.seconds = sw.seconds();
  if (!dir.empty()) write_csv(dir + "/norms.csv", {"function", "s", "k", "lhs", "rhs", "rel_diff"}, rows);
  emit_verdict(dir, v);
  return v;
}

}  // namespace rwave::harness
