#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <sstream>

#include "keptop/scenario.hpp"

using namespace keptop;
namespace fs = std::filesystem;

namespace {

std::string temp_dir(const std::string& leaf) {
  const fs::path dir = fs::temp_directory_path() / "keptop_tests" / leaf;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir.string();
}

Json circle_scenario(const std::string& out, const std::string& tasks = "analyze2d") {
  Json j{{"name", "circle-test"},
         {"dimension", 2},
         {"kernel", {{"q", 2.0}, {"sign", "attractive"}}},
         {"curve", {{"kind", "catalog"}, {"name", "circle"}}},
         {"tasks", Json::array({tasks})},
         {"solver",
          {{"resolution", 256}, {"modes", 16}, {"n_starts", 60}, {"seed", 7},
           {"delta_erode", 0.2}}},
         {"output_dir", out}};
  return j;
}

}  // namespace

TEST_CASE("scenario validation reports field paths") {
  Json bad = circle_scenario(temp_dir("val"));
  bad["tasks"] = Json::array({"analyze2d", "frobnicate"});
  try {
    parse_scenario(bad);
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("tasks[1]") != std::string::npos);
  }

  Json bad2 = circle_scenario(temp_dir("val2"));
  bad2["solver"]["resolution"] = 32;
  CHECK_THROWS_AS(parse_scenario(bad2), ValidationError);

  Json bad3 = circle_scenario(temp_dir("val3"));
  bad3["dimension"] = 3;  // analyze2d needs the plane
  CHECK_THROWS_AS(parse_scenario(bad3), ValidationError);

  Json bad4 = circle_scenario(temp_dir("val4"));
  bad4["kernel"]["sign"] = "sideways";
  CHECK_THROWS_AS(parse_scenario(bad4), ValidationError);
}

TEST_CASE("curve serialization round trip") {
  const PeriodicCurve c = catalog_curve("epicycloid");
  const PeriodicCurve back = curve_from_json(curve_to_json(c));
  for (double t : {0.0, 0.29, 0.64}) CHECK((c.eval(t) - back.eval(t)).norm() < 1e-13);
}

TEST_CASE("explicit coefficient curves and the forcing role") {
  // h = (2 pi)^2 e^{2 pi i t} as explicit coefficients; H should be the circle.
  const double w = kTwoPi * kTwoPi;
  Json spec{{"name", "coeffs"},
            {"dimension", 2},
            {"curve",
             {{"kind", "coefficients"},
              {"role", "h"},
              {"modes", Json::array({Json{{"k", 1},
                                          {"coeffs", Json::array({Json::array({0.5 * w, 0.0}),
                                                                  Json::array({0.0, -0.5 * w})})}}})}}},
            {"tasks", Json::array({"analyze2d"})},
            {"solver", {{"resolution", 256}}},
            {"output_dir", temp_dir("coeffs")}};
  const Scenario sc = parse_scenario(spec);
  const CurveSet set = build_curves(sc);
  REQUIRE(set.component_count() == 1);
  const PeriodicCurve circle = catalog_curve("circle");
  for (double t : {0.1, 0.5}) CHECK((set.curves[0].eval(t) - circle.eval(t)).norm() < 1e-12);
}

TEST_CASE("satellite offsets build the k_i = H + p_i set") {
  Json spec = circle_scenario(temp_dir("sat"));
  spec["dimension"] = 3;
  spec["tasks"] = Json::array({"knots3d"});
  spec["curve"] = Json{
      {"kind", "coefficients"},
      {"modes", Json::array({Json{{"k", 1},
                                  {"coeffs",
                                   Json::array({Json::array({0.5, 0.0}),
                                                Json::array({0.0, -0.5}),
                                                Json::array({0.0, 0.0})})}}})},
      {"satellites",
       Json::array(
           {Json{{"modes", Json::array({Json{{"k", 0},
                                             {"coeffs",
                                              Json::array({Json::array({4.0, 0.0}),
                                                           Json::array({0.0, 0.0}),
                                                           Json::array({0.0, 0.0})})}}})}},
            Json{{"modes", Json::array({Json{{"k", 0},
                                             {"coeffs",
                                              Json::array({Json::array({-4.0, 0.0}),
                                                           Json::array({0.0, 0.0}),
                                                           Json::array({0.0, 0.0})})}}})}}})}};
  const Scenario sc = parse_scenario(spec);
  const CurveSet set = build_curves(sc);
  REQUIRE(set.component_count() == 2);
  CHECK((set.curves[0].mean() - set.curves[1].mean()).norm() == doctest::Approx(8.0));
}

TEST_CASE("run produces a sealed report with passing checks") {
  const std::string out = temp_dir("run");
  const Scenario sc = parse_scenario(circle_scenario(out));
  RunOptions opts;
  opts.use_cache = false;
  const RunOutcome outcome = run_scenario(sc, opts);

  CHECK(outcome.hard_failures == 0);
  CHECK(fs::exists(outcome.report_path));
  CHECK(report_hash_matches(outcome.report));
  CHECK(outcome.report["tasks"]["analyze2d"]["r"] == 1);
  CHECK(fs::exists(fs::path(out) / "map.svg"));

  // Deterministic reruns: identical content hash.
  const RunOutcome again = run_scenario(sc, opts);
  CHECK(outcome.report["provenance"]["content_hash"] ==
        again.report["provenance"]["content_hash"]);
}

TEST_CASE("cache serves idempotent reruns") {
  const std::string out = temp_dir("cache");
  const Scenario sc = parse_scenario(circle_scenario(out));
  RunOptions opts;
  const RunOutcome first = run_scenario(sc, opts);
  CHECK_FALSE(first.from_cache);
  const RunOutcome second = run_scenario(sc, opts);
  CHECK(second.from_cache);
  CHECK(first.report == second.report);  // byte-identical including timestamp

  RunOptions fresh;
  fresh.use_cache = false;
  const RunOutcome third = run_scenario(sc, fresh);
  CHECK_FALSE(third.from_cache);

  // A different seed is a different cache entry.
  RunOptions reseeded;
  reseeded.seed_override = 99;
  const RunOutcome fourth = run_scenario(sc, reseeded);
  CHECK_FALSE(fourth.from_cache);
}

TEST_CASE("verify passes on an honest report and flags a tampered one") {
  const std::string out = temp_dir("verify");
  const Scenario sc = parse_scenario(circle_scenario(out));
  RunOptions opts;
  opts.use_cache = false;
  const RunOutcome outcome = run_scenario(sc, opts);

  std::ostringstream log;
  CHECK(verify_report(outcome.report, log) == 0);
  CHECK(log.str().find("VERIFY PASS") != std::string::npos);

  Json tampered = outcome.report;
  tampered["tasks"]["analyze2d"]["r"] = 3;
  std::ostringstream log2;
  CHECK(verify_report(tampered, log2) > 0);
  CHECK(log2.str().find("content_hash") != std::string::npos);
}

TEST_CASE("verify reports orbit checks as not applicable without an orbits task") {
  const std::string out = temp_dir("na");
  const Scenario sc = parse_scenario(circle_scenario(out));
  RunOptions opts;
  opts.use_cache = false;
  const RunOutcome outcome = run_scenario(sc, opts);
  std::ostringstream log;
  verify_report(outcome.report, log);
  CHECK(log.str().find("orbits.residual_recheck") != std::string::npos);
  CHECK(log.str().find("not_applicable") != std::string::npos);
}

TEST_CASE("lambda zero scenario records the refusal") {
  Json spec = circle_scenario(temp_dir("lambda0"), "orbits");
  spec["kernel"]["sign"] = "repulsive";
  spec["solver"]["lambda"] = 0.0;
  const Scenario sc = parse_scenario(spec);
  RunOptions opts;
  opts.use_cache = false;
  const RunOutcome outcome = run_scenario(sc, opts);
  CHECK(outcome.hard_failures > 0);
  const std::string err = outcome.report["tasks"]["orbits"]["error"].get<std::string>();
  CHECK(err.find("no periodic solutions at lambda = 0") != std::string::npos);
}

TEST_CASE("golden scenario files parse") {
  for (const char* name : {"epicycloid", "epicycloid_repulsive", "circle", "unknot",
                           "trefoil", "unlink2", "segment_repulsive", "arc"}) {
    CAPTURE(name);
    const fs::path path =
        fs::path(KEPTOP_SOURCE_DIR) / "scenarios" / (std::string(name) + ".json");
    REQUIRE(fs::exists(path));
    CHECK_NOTHROW(parse_scenario(load_json(path.string())));
  }
}
