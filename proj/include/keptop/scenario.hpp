#pragma once

#include <optional>
#include <string>
#include <vector>

#include "keptop/curve.hpp"
#include "keptop/field.hpp"
#include "keptop/report.hpp"

namespace keptop {

/// Parsed scenario file: curve choice, kernel, task list and solver knobs.
struct Scenario {
  std::string name;
  int dimension = 2;
  Kernel kernel;

  // Curve block.
  std::string curve_kind;  // "catalog" | "coefficients"
  std::string curve_name;  // catalog entries
  CatalogParams curve_params;
  std::string curve_role = "H";  // "H": geometry as given; "h": forcing, H = 2nd primitive
  Json curve_modes;              // explicit coefficients ([{k, coeffs: [[re,im],...]}])
  std::vector<Json> satellites;  // optional p_i specs; the set becomes {H + p_i}

  std::vector<std::string> tasks;

  // Solver knobs (defaults recorded into the report for provenance).
  int resolution = 1024;
  int modes = 64;
  std::vector<double> epsilons{1e-3};
  std::optional<double> lambda_level;  // alternative entry point; eps = lambda^-(q+1)
  int n_starts = 512;
  std::uint64_t seed = 1;
  int quadrature_nodes = 256;
  double delta_erode = 0.05;
  int n_random_orbit_seeds = 32;

  std::string output_dir = "out";

  Json raw;  // scenario exactly as parsed, echoed into reports
};

/// Parse and validate; error messages carry the offending field path.
Scenario parse_scenario(const Json& j);

/// Build the curve set K of a scenario (handles catalog, explicit
/// coefficients, the forcing role, and satellite offsets).
CurveSet build_curves(const Scenario& sc);

/// Serialize a curve's nonnegative Fourier modes (the negative ones follow
/// from the reality condition).
Json curve_to_json(const PeriodicCurve& c);
PeriodicCurve curve_from_json(const Json& j);

struct RunOptions {
  bool use_cache = true;
  std::optional<std::uint64_t> seed_override;
  std::string out_override;  // empty: scenario's output_dir
};

struct RunOutcome {
  Json report;
  bool from_cache = false;
  int hard_failures = 0;
  std::string report_path;
};

/// Execute the scenario's tasks in dependency order, write report.json and
/// the SVG plots, and return the report. Task failures are recorded and the
/// run continues where tasks are independent.
RunOutcome run_scenario(const Scenario& sc, const RunOptions& opts = {});

/// Re-run the invariant suite against a stored report (or fresh scenario);
/// prints one line per check and returns the number of failures.
int verify_report(const Json& report_or_scenario, std::ostream& out);

}  // namespace keptop
