#include <CLI11.hpp>
#include <filesystem>
#include <iostream>

#include "keptop/scenario.hpp"
#include "keptop/svg.hpp"

using namespace keptop;

namespace {

int cmd_run(const std::string& scenario_path, const std::string& out_dir, bool no_cache,
            std::optional<std::uint64_t> seed) {
  const Json doc = load_json(scenario_path);
  const Scenario sc = parse_scenario(doc);
  RunOptions opts;
  opts.use_cache = !no_cache;
  opts.out_override = out_dir;
  opts.seed_override = seed;
  const RunOutcome outcome = run_scenario(sc, opts);

  std::cout << "scenario: " << sc.name << (outcome.from_cache ? " (cached)" : "") << "\n";
  for (const auto& pred : outcome.report["predictions"])
    std::cout << "  " << pred["name"].get<std::string>() << ": predicted "
              << pred["predicted"] << ", found " << pred["found"] << " ["
              << pred["status"].get<std::string>() << "]\n";
  int failed = 0, total = 0;
  for (const auto& c : outcome.report["checks"]) {
    ++total;
    if (!c["passed"].get<bool>() && c["hard"].get<bool>()) {
      ++failed;
      std::cout << "  FAILED " << c["name"].get<std::string>() << ": "
                << c["detail"].get<std::string>() << "\n";
    }
  }
  std::cout << "checks: " << (total - failed) << "/" << total << " passed\n";
  std::cout << "report: " << outcome.report_path << "\n";
  return outcome.hard_failures == 0 ? 0 : 1;
}

int cmd_plot(const std::string& report_path, const std::string& kind,
             const std::string& out_dir) {
  const Json report = load_json(report_path);
  if (!report.contains("scenario"))
    throw ValidationError("plot needs a report produced by 'run'");
  const Scenario sc = parse_scenario(report["scenario"]);
  const std::string dir = out_dir.empty() ? sc.output_dir : out_dir;
  const Json& tasks = report["tasks"];

  auto orbit_traces2d = [&]() {
    std::vector<std::pair<int, Mat>> traces;
    for (const char* tn : {"orbits", "nbody"})
      if (tasks.contains(tn) && !tasks[tn].contains("error"))
        for (const auto& run : tasks[tn]["runs"])
          for (const auto& row : run["orbits"])
            traces.emplace_back(row.value("winding", 0),
                                curve_from_json(row["z"]).sample(256));
    return traces;
  };
  auto critical2d = [&]() {
    std::vector<Vec2> points;
    if (tasks.contains("critical") && !tasks["critical"].contains("error"))
      for (const auto& row : tasks["critical"]["points"])
        points.emplace_back(row["x"][0].get<double>(), row["x"][1].get<double>());
    return points;
  };

  if (kind == "map" || kind == "orbits") {
    if (sc.dimension != 2) throw ValidationError("map plots need a planar scenario");
    const CurveSet curves = build_curves(sc);
    const ComplementMap map = analyze_complement(curves.curves[0], sc.resolution);
    const auto traces =
        kind == "orbits" ? orbit_traces2d() : std::vector<std::pair<int, Mat>>{};
    if (kind == "orbits" && traces.empty())
      std::cout << "note: report carries no orbits; plotting the bare map\n";
    const std::string path =
        (std::filesystem::path(dir) / (kind + std::string(".svg"))).string();
    atomic_write(path, svg_map(map, traces, critical2d()));
    std::cout << "wrote " << path << "\n";
  } else if (kind == "projections") {
    if (sc.dimension != 3) throw ValidationError("projection plots need a spatial scenario");
    const CurveSet curves = build_curves(sc);
    std::vector<Mat> polys;
    for (const auto& c : curves.curves) polys.push_back(c.sample(512));
    std::vector<Vec> crits;
    if (tasks.contains("critical") && !tasks["critical"].contains("error"))
      for (const auto& row : tasks["critical"]["points"]) {
        Vec x(3);
        for (int i = 0; i < 3; ++i) x[i] = row["x"][i].get<double>();
        crits.push_back(x);
      }
    std::vector<Mat> traces;
    for (const char* tn : {"orbits", "nbody"})
      if (tasks.contains(tn) && !tasks[tn].contains("error"))
        for (const auto& run : tasks[tn]["runs"])
          for (const auto& row : run["orbits"])
            traces.push_back(curve_from_json(row["z"]).sample(256));
    const std::string path = (std::filesystem::path(dir) / "projections.svg").string();
    atomic_write(path, svg_projections(polys, crits, traces));
    std::cout << "wrote " << path << "\n";
  } else {
    throw ValidationError("plot kind must be map, orbits or projections");
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"topological prediction and numerical continuation of periodic orbits "
               "for periodically forced Kepler-type problems"};
  app.require_subcommand(1);

  std::string scenario_path, report_path, out_dir, kind = "map";
  bool no_cache = false;
  std::optional<std::uint64_t> seed;

  auto* run = app.add_subcommand("run", "execute a scenario file");
  run->add_option("scenario", scenario_path, "scenario JSON path")->required();
  run->add_option("--out", out_dir, "output directory override");
  run->add_flag("--no-cache", no_cache, "ignore and refresh the cache");
  run->add_option("--seed", seed, "seed override");

  auto* plot = app.add_subcommand("plot", "render SVG plots from a report");
  plot->add_option("report", report_path, "report JSON path")->required();
  plot->add_option("--kind", kind, "map | orbits | projections");
  plot->add_option("--out", out_dir, "output directory override");

  auto* verify = app.add_subcommand("verify", "re-run the invariant suite");
  verify->add_option("input", report_path, "report or scenario JSON path")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(scenario_path, out_dir, no_cache, seed);
    if (plot->parsed()) return cmd_plot(report_path, kind, out_dir);
    if (verify->parsed()) return verify_report(load_json(report_path), std::cout) == 0 ? 0 : 1;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
