// Command line driver for the rwave pipelines.
//
//   rwave_cli <command> [--scenario file.json] [--out dir] [--threads n] [--seed u64]
//
// Commands: dispersion, amplitude, cascade, residual, compare, norms. Each
// command writes CSV tables and a verdict.json into <out>/<command>/ and exits
// with status 1 if any check fails (2 on configuration errors).

#include <cstdint>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rwave/harness.hpp"

#ifndef RWAVE_SCHEMA
#define RWAVE_SCHEMA "scenarios/schema.json"
#endif

namespace {

using namespace rwave;
using namespace rwave::harness;

int default_threads() {
  if (const char* env = std::getenv("RWAVE_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n > 0) return n;
    } catch (const std::exception&) {
    }
    std::cerr << "warning: ignoring invalid RWAVE_THREADS='" << env << "'\n";
  }
  return 1;
}

void print(const Verdict& v) {
  for (const auto& c : v.checks) std::cout << (c.pass ? "  pass  " : "  FAIL  ") << c.describe() << "\n";
  std::cout << v.command << ": " << (v.pass() ? "PASS" : "FAIL") << " (" << v.seconds << " s)\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Weakly nonlinear Rayleigh wavetrains: cascade construction and verification"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string scenario_path, schema_path = RWAVE_SCHEMA, out_dir = "out";
  std::optional<int> threads;
  std::optional<std::uint64_t> seed;
  app.add_option("--scenario", scenario_path, "Scenario file (JSON, overlaid on the schema defaults)");
  app.add_option("--schema", schema_path, "Schema file holding the defaults")->capture_default_str();
  app.add_option("--out", out_dir, "Output directory")->capture_default_str();
  app.add_option("--threads", threads, "Worker threads (default: $RWAVE_THREADS or 1)")
      ->check(CLI::PositiveNumber);
  app.add_option("--seed", seed, "Seed for random draws (overrides the scenario)");

  std::vector<double> rs;
  auto* disp = app.add_subcommand("dispersion", "Rayleigh speed, roots and Lopatinski data");
  disp->add_option("--r", rs, "Ratios (lambda + 2 mu) / mu (default: scenario list)");
  app.add_subcommand("amplitude", "Amplitude-equation solver checks and tame/cancellation reports");
  app.add_subcommand("cascade", "Build the profile cascade and check profile equations and gates");
  app.add_subcommand("residual", "Residual orders of the approximate solution across eps");
  app.add_subcommand("compare", "Finite-difference solution against the approximate solution");
  app.add_subcommand("norms", "Scaling identity of the eps-weighted norms");

  CLI11_PARSE(app, argc, argv);

  try {
    Scenario s = Scenario::load(schema_path, scenario_path);
    if (seed) s.doc()["seed"] = *seed;
    RunOptions o;
    o.out_dir = out_dir;
    o.threads = threads ? *threads : default_threads();

    const std::string cmd = app.get_subcommands().front()->get_name();
    Verdict v;
    if (cmd == "dispersion") v = run_dispersion(rs.empty() ? s.get<std::vector<double>>("/dispersion/r") : rs, s, o);
    else if (cmd == "amplitude") v = run_amplitude(s, o);
    else if (cmd == "cascade") v = run_cascade(s, o);
    else if (cmd == "residual") v = run_residual(s, o);
    else if (cmd == "compare") v = run_compare(s, o);
    else v = run_norms(s, o);
    print(v);
    return v.pass() ? 0 : 1;
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const ResolutionError& e) {
    std::cerr << "resolution error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
