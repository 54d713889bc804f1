#include "keptop/scenario.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <set>

#include "keptop/critical.hpp"
#include "keptop/degree.hpp"
#include "keptop/knots3d.hpp"
#include "keptop/orbits.hpp"
#include "keptop/planar.hpp"
#include "keptop/svg.hpp"

namespace keptop {

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& message) {
  throw ValidationError(path + ": " + message);
}

const std::set<std::string> kKnownTasks{"analyze2d", "degree", "critical",
                                        "knots3d",   "orbits", "nbody"};

}  // namespace

Scenario parse_scenario(const Json& j) {
  Scenario sc;
  sc.raw = j;
  if (!j.is_object()) fail("$", "scenario must be a JSON object");

  sc.name = j.value("name", std::string("unnamed"));
  sc.dimension = j.value("dimension", 2);
  if (sc.dimension != 2 && sc.dimension != 3)
    fail("dimension", "must be 2 or 3");

  if (j.contains("kernel")) {
    const Json& k = j["kernel"];
    sc.kernel.q = k.value("q", 2.0);
    const std::string sign = k.value("sign", std::string("attractive"));
    if (sign == "attractive")
      sc.kernel.sign = ForceSign::attractive;
    else if (sign == "repulsive")
      sc.kernel.sign = ForceSign::repulsive;
    else
      fail("kernel.sign", "must be 'attractive' or 'repulsive'");
    if (sc.kernel.q < 2.0) fail("kernel.q", "must be >= 2");
  }

  if (!j.contains("curve")) fail("curve", "missing curve block");
  const Json& c = j["curve"];
  sc.curve_kind = c.value("kind", std::string("catalog"));
  if (sc.curve_kind == "catalog") {
    if (!c.contains("name")) fail("curve.name", "catalog curves need a name");
    sc.curve_name = c["name"].get<std::string>();
    if (c.contains("params")) {
      const Json& p = c["params"];
      sc.curve_params.l = p.value("l", sc.curve_params.l);
      sc.curve_params.p = p.value("p", sc.curve_params.p);
      sc.curve_params.q = p.value("q", sc.curve_params.q);
      sc.curve_params.c = p.value("c", sc.curve_params.c);
      sc.curve_params.separation = p.value("separation", sc.curve_params.separation);
      sc.curve_params.dimension = p.value("dimension", sc.curve_params.dimension);
    }
  } else if (sc.curve_kind == "coefficients") {
    if (!c.contains("modes") || !c["modes"].is_array())
      fail("curve.modes", "explicit curves need a modes array");
    sc.curve_modes = c["modes"];
  } else {
    fail("curve.kind", "must be 'catalog' or 'coefficients'");
  }
  sc.curve_role = c.value("role", std::string("H"));
  if (sc.curve_role != "H" && sc.curve_role != "h")
    fail("curve.role", "must be 'H' (geometry) or 'h' (forcing)");
  if (c.contains("satellites")) {
    if (!c["satellites"].is_array()) fail("curve.satellites", "must be an array");
    for (const auto& s : c["satellites"]) sc.satellites.push_back(s);
  }

  if (!j.contains("tasks") || !j["tasks"].is_array() || j["tasks"].empty())
    fail("tasks", "need a nonempty task array");
  for (size_t i = 0; i < j["tasks"].size(); ++i) {
    const std::string t = j["tasks"][i].get<std::string>();
    if (!kKnownTasks.count(t))
      fail("tasks[" + std::to_string(i) + "]", "unknown task '" + t + "'");
    sc.tasks.push_back(t);
  }
  for (const auto& t : sc.tasks) {
    if (t == "analyze2d" && sc.dimension != 2)
      fail("tasks", "analyze2d requires dimension 2");
    if (t == "knots3d" && sc.dimension != 3)
      fail("tasks", "knots3d requires dimension 3");
  }

  if (j.contains("solver")) {
    const Json& s = j["solver"];
    sc.resolution = s.value("resolution", sc.resolution);
    if (sc.resolution < 128) fail("solver.resolution", "must be >= 128");
    sc.modes = s.value("modes", sc.modes);
    if (sc.modes < 4) fail("solver.modes", "must be >= 4");
    if (s.contains("epsilons")) {
      sc.epsilons.clear();
      for (double e : s["epsilons"]) sc.epsilons.push_back(e);
    }
    if (s.contains("lambda")) sc.lambda_level = s["lambda"].get<double>();
    sc.n_starts = s.value("n_starts", sc.n_starts);
    sc.seed = s.value("seed", sc.seed);
    sc.quadrature_nodes = s.value("quadrature_nodes", sc.quadrature_nodes);
    if (sc.quadrature_nodes < 64) fail("solver.quadrature_nodes", "must be >= 64");
    sc.delta_erode = s.value("delta_erode", sc.delta_erode);
    sc.n_random_orbit_seeds = s.value("n_random_orbit_seeds", sc.n_random_orbit_seeds);
  }
  sc.output_dir = j.value("output_dir", sc.output_dir);
  return sc;
}

Json curve_to_json(const PeriodicCurve& c) {
  Json modes = Json::array();
  for (int k = 0; k <= c.max_mode(); ++k) {
    const Eigen::VectorXcd ck = c.mode(k);
    if (ck.cwiseAbs().maxCoeff() == 0.0 && k > 0) continue;
    Json coeffs = Json::array();
    for (int a = 0; a < ck.size(); ++a)
      coeffs.push_back(Json::array({ck[a].real(), ck[a].imag()}));
    modes.push_back(Json{{"k", k}, {"coeffs", coeffs}});
  }
  return Json{{"dimension", c.dimension()}, {"modes", modes}};
}

PeriodicCurve curve_from_json(const Json& j) {
  const int dim = j.at("dimension").get<int>();
  std::map<int, Eigen::VectorXcd> modes;
  for (const auto& m : j.at("modes")) {
    const int k = m.at("k").get<int>();
    const Json& coeffs = m.at("coeffs");
    if (static_cast<int>(coeffs.size()) != dim)
      throw ValidationError("curve.modes: coefficient row has wrong dimension");
    Eigen::VectorXcd ck(dim);
    for (int a = 0; a < dim; ++a)
      ck[a] = std::complex<double>(coeffs[a][0].get<double>(), coeffs[a][1].get<double>());
    modes[k] = ck;
  }
  return PeriodicCurve::from_modes(dim, modes);
}

CurveSet build_curves(const Scenario& sc) {
  CurveSet set;
  if (sc.curve_kind == "catalog") {
    CatalogParams params = sc.curve_params;
    if (params.dimension == 0) params.dimension = sc.dimension;
    set = catalog(sc.curve_name, params);
  } else {
    set.curves.push_back(curve_from_json(Json{{"dimension", sc.dimension},
                                              {"modes", sc.curve_modes}}));
  }
  if (sc.curve_role == "h") {
    for (auto& c : set.curves) c = c.second_primitive();
  }
  if (!sc.satellites.empty()) {
    if (set.component_count() != 1)
      throw ValidationError("curve.satellites: offsets need a single base curve H");
    const PeriodicCurve H = set.curves[0];
    set.curves.clear();
    for (const auto& s : sc.satellites) {
      PeriodicCurve p = curve_from_json(
          Json{{"dimension", sc.dimension}, {"modes", s.at("modes")}});
      set.curves.push_back(H.plus(p));
    }
  }
  if (set.dimension() != sc.dimension)
    throw ValidationError("curve: catalog entry dimension disagrees with the scenario");
  return set;
}

// ---------------------------------------------------------------------------
// Task runners
// ---------------------------------------------------------------------------

namespace {

struct TaskState {
  explicit TaskState(const Scenario& scenario) : sc(scenario) {}

  const Scenario& sc;
  CurveSet curves;
  std::optional<ForceContext> ctx;
  std::optional<ComplementMap> map;
  std::vector<CriticalPoint> critical;
  bool critical_done = false;
  std::optional<LinkData> link;
  std::vector<std::pair<int, PeriodicOrbit>> component_orbits;  // 2D: component id -> orbit

  Json checks = Json::array();
  Json predictions = Json::array();
  int hard_failures = 0;

  void check(const std::string& name, bool passed, bool hard, const std::string& detail) {
    checks.push_back(Json{{"name", name}, {"passed", passed}, {"hard", hard},
                          {"detail", detail}});
    if (!passed && hard) ++hard_failures;
  }
  void predict(const std::string& name, int predicted, int found, const std::string& status,
               const std::string& detail = "") {
    predictions.push_back(Json{{"name", name}, {"predicted", predicted}, {"found", found},
                               {"status", status}, {"detail", detail}});
  }
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

const ComplementMap& need_map(TaskState& st) {
  if (!st.map) st.map = analyze_complement(st.curves.curves[0], st.sc.resolution);
  return *st.map;
}

const std::vector<CriticalPoint>& need_critical(TaskState& st) {
  if (!st.critical_done) {
    SearchOptions opts;
    opts.n_starts = st.sc.n_starts;
    opts.seed = st.sc.seed;
    st.critical = find_critical_points(*st.ctx, default_search_box(*st.ctx), opts);
    st.critical_done = true;
  }
  return st.critical;
}

Json run_analyze2d(TaskState& st) {
  const ComplementMap& map = need_map(st);
  const MultiplicityBounds bounds = multiplicity_bounds(map);

  Json components = Json::array();
  long complement_cells = 0;
  bool windings_consistent = true;
  for (const auto& comp : map.components) {
    components.push_back(Json{{"id", comp.id},
                              {"bounded", comp.bounded},
                              {"winding", comp.winding},
                              {"representative", {comp.representative.x(), comp.representative.y()}},
                              {"representative_distance", comp.representative_distance},
                              {"cell_count", comp.cell_count}});
    complement_cells += comp.cell_count;
    windings_consistent = windings_consistent && comp.winding_consistent;
  }

  st.check("analyze2d.partition",
           complement_cells + map.curve_cells ==
               static_cast<long>(map.resolution) * map.resolution,
           true, "component cells + curve cells fill the box");
  st.check("analyze2d.winding_consistency", windings_consistent, true,
           "winding agrees at re-sampled cells of every component");

  // Refinement stability against a half-resolution pass.
  if (map.resolution / 2 >= 128) {
    const ComplementMap coarse =
        analyze_complement(st.curves.curves[0], map.resolution / 2);
    st.check("analyze2d.refinement_stability",
             coarse.r() == map.r() && coarse.winding_multiset() == map.winding_multiset(),
             true, "r and windings agree between resolutions " +
                       std::to_string(map.resolution / 2) + " and " +
                       std::to_string(map.resolution));
  }

  if (bounds.r == 0)
    st.predict("bounded_components", 0, 0, "not_applicable",
               "no bounded components: the topological condition is sufficient, not "
               "necessary, so existence may still hold");

  Json out{{"resolution", map.resolution},
           {"r", bounds.r},
           {"s", bounds.s},
           {"windings", map.winding_multiset()},
           {"attractive_bound", bounds.attractive_bound},
           {"repulsive_bound", bounds.repulsive_bound},
           {"condition_met", bounds.condition_met},
           {"components", components},
           {"curve_cells", map.curve_cells},
           {"discarded_components", map.discarded_components}};
  return out;
}

Json run_degree(TaskState& st) {
  Json out;
  const ForceContext& ctx = *st.ctx;
  const double q = ctx.kernel().q;

  // Kernel reference degrees (curve-independent).
  {
    const VectorField g2 = [q](const Vec& x) { return grad_g(x, q); };
    Loop2 loop;
    for (int k = 0; k < 96; ++k)
      loop.emplace_back(0.5 * std::cos(kTwoPi * k / 96), 0.5 * std::sin(kTwoPi * k / 96));
    const DegreeResult d2 = degree_2d(g2, {loop});
    const DegreeResult d3 = degree_3d(g2, sphere_surface(Vec3::Zero(), 0.5));
    out["kernel_degrees"] = Json{{"plane", d2.value}, {"space", d3.value},
                                 {"plane_raw", d2.raw}, {"space_raw", d3.raw}};
    st.check("degree.kernel_plane", d2.value == 1, true,
             "kernel gradient degree over a small circle is (-1)^2");
    st.check("degree.kernel_space", d3.value == -1, true,
             "kernel gradient degree over a small sphere is (-1)^3");
  }

  const VectorField minus_grad = [&ctx](const Vec& x) { return Vec(-ctx.grad_G(x)); };
  const double R = 10.0 * ctx.curve_radius();
  const Vec center = ctx.curve_center();

  if (st.sc.dimension == 2) {
    const ComplementMap& map = need_map(st);
    const VectorField Ffield = [&ctx](const Vec& x) { return ctx.F(x); };

    Json comp_degrees = Json::array();
    std::vector<std::vector<Loop2>> inner_boundaries;
    int degree_sum = 0;
    bool all_one = true;
    for (const auto& comp : map.components) {
      if (!comp.bounded) continue;
      const Region region = erode_component(map, comp.id, st.sc.delta_erode);
      const DegreeResult d = degree_2d(Ffield, region.boundary);
      comp_degrees.push_back(Json{{"component", comp.id},
                                  {"winding", comp.winding},
                                  {"degree", d.value},
                                  {"raw", d.raw},
                                  {"min_field_norm", d.min_field_norm}});
      degree_sum += d.value;
      all_one = all_one && (d.value == 1);
      st.check("degree.component_" + std::to_string(comp.id) + "_certificate",
               std::abs(d.raw - d.value) < 0.25, true,
               "rounding residue " + fmt(std::abs(d.raw - d.value)));
      inner_boundaries.push_back(region.boundary);
    }
    out["components"] = comp_degrees;
    st.check("degree.components_equal_one", all_one, true,
             "averaged force has degree 1 over every eroded bounded component");

    Loop2 big;
    for (int k = 0; k < 512; ++k)
      big.emplace_back(center[0] + R * std::cos(kTwoPi * k / 512),
                       center[1] + R * std::sin(kTwoPi * k / 512));
    const DegreeResult far = degree_2d(minus_grad, {big});
    out["far_field"] = Json{{"radius", R}, {"degree", far.value}, {"raw", far.raw}};
    st.check("degree.far_field", far.value == 1, true,
             "-grad G is homotopic to the identity on a large circle");

    const DegreeResult far_F = degree_2d(Ffield, {big});
    const DegreeResult annulus =
        degree_region_with_holes(Ffield, {big}, inner_boundaries);
    out["annulus"] = Json{{"degree", annulus.value},
                          {"expected", far_F.value - degree_sum}};
    st.check("degree.annulus_additivity",
             annulus.value == far_F.value - degree_sum, true,
             "ball-minus-components degree equals " + std::to_string(far_F.value) + " - " +
                 std::to_string(degree_sum));
  } else {
    const DegreeResult far =
        degree_3d(minus_grad, sphere_surface(Vec3(center[0], center[1], center[2]), R));
    out["far_field"] = Json{{"radius", R}, {"degree", far.value}, {"raw", far.raw}};
    st.check("degree.far_field", far.value == 1, true,
             "-grad G is homotopic to the identity on a large sphere");
  }
  return out;
}

Json critical_point_to_json(const CriticalPoint& cp) {
  Json eigs = Json::array();
  for (int i = 0; i < cp.eigenvalues.size(); ++i) eigs.push_back(cp.eigenvalues[i]);
  Json x = Json::array();
  for (int i = 0; i < cp.x.size(); ++i) x.push_back(cp.x[i]);
  return Json{{"x", x},
              {"G", cp.G_value},
              {"grad_norm", cp.grad_norm},
              {"eigenvalues", eigs},
              {"morse_index", cp.morse_index},
              {"local_degree", cp.local_degree},
              {"distance_to_K", cp.distance_to_K},
              {"degenerate", cp.degenerate},
              {"fd_ok", cp.fd_ok}};
}

Json run_critical(TaskState& st) {
  const auto& points = need_critical(st);
  const ForceContext& ctx = *st.ctx;

  Json table = Json::array();
  bool grads_ok = true, no_maxima = true, fd_ok = true, distances_ok = true;
  for (const auto& cp : points) {
    table.push_back(critical_point_to_json(cp));
    grads_ok = grads_ok && cp.grad_norm < 1e-9 * (1.0 + std::abs(cp.G_value));
    if (ctx.kernel().q >= ctx.dimension() - 1)
      no_maxima = no_maxima && cp.morse_index < ctx.dimension();
    fd_ok = fd_ok && cp.fd_ok;
    distances_ok = distances_ok && cp.distance_to_K > 5e-3;
  }
  st.check("critical.gradient_norms", grads_ok, true,
           "every point satisfies |grad G| < 1e-9 (1 + |G|)");
  st.check("critical.no_local_maxima", no_maxima, true,
           "no Morse index n points under subharmonicity");
  st.check("critical.hessian_fd", fd_ok, true,
           "Hessians agree with finite differences of grad G");
  st.check("critical.exclusion", distances_ok, true,
           "no accepted point inside the exclusion radius of K");

  Json out{{"count", static_cast<int>(points.size())}, {"points", table}};

  if (st.sc.dimension == 3) {
    bool any_degenerate = false;
    for (const auto& cp : points) any_degenerate = any_degenerate || cp.degenerate;
    if (!any_degenerate && !points.empty()) {
      const MorseCensus census = morse_census(ctx, points);
      out["census"] = Json{{"m1", census.m1},
                           {"m2", census.m2},
                           {"m3", census.m3},
                           {"identity_holds", census.identity_holds},
                           {"degree_sum", census.degree_sum},
                           {"far_field_degree", census.far_field_degree},
                           {"exhaustive", census.exhaustive}};
      if (census.exhaustive)
        st.check("critical.census_identity", census.identity_holds, true,
                 "m2 - m1 = m3 + 1 under the exhaustiveness heuristic");
      else
        st.check("critical.census_identity", true, false,
                 "search not exhaustive by the degree heuristic; identity not enforced");
    } else if (any_degenerate) {
      out["census"] = Json{{"refused", "degenerate critical points present"}};
    }

    if (st.sc.curve_kind == "catalog") {
      const auto tunnel = tunnel_catalog(st.sc.curve_name, st.sc.curve_params.c);
      if (tunnel) {
        const int bound = 2 * *tunnel + 1;
        const bool met = knot_bound_check(static_cast<int>(points.size()), *tunnel);
        out["knot_bound"] = Json{{"tunnel_number", *tunnel},
                                 {"bound", bound},
                                 {"count", static_cast<int>(points.size())},
                                 {"met", met}};
        st.predict("critical_points_vs_tunnel_bound", bound,
                   static_cast<int>(points.size()),
                   met ? "met" : "not_met_search_limit",
                   "tunnel-number bound 2t+1 on critical points");
      }
    }
  }
  return out;
}

Json run_knots3d(TaskState& st) {
  LinkData link = homology_rank(st.curves);
  if (st.sc.curve_kind == "catalog") {
    link.catalog_name = st.sc.curve_name;
    link.tunnel_number = tunnel_catalog(st.sc.curve_name, st.sc.curve_params.c);
  }
  st.link = link;
  const Bounds3d bounds = bounds_3d(link);

  st.check("knots3d.rank_rule", link.homology_rank == link.double_points + link.components,
           true, "r = d + c");
  st.check("knots3d.generic_position", link.cross_check_ok, false,
           link.cross_check_ok
               ? "no crossings merge distinct components"
               : "crossings merge components; r = d + c is flagged unreliable here");

  Json out{{"double_points", link.double_points},
           {"components", link.components},
           {"homology_rank", link.homology_rank},
           {"degree_bound", bounds.degree_bound}};
  if (link.tunnel_number) out["tunnel_number"] = *link.tunnel_number;
  if (bounds.morse_bound) out["morse_bound"] = *bounds.morse_bound;
  if (!link.catalog_name.empty()) out["catalog_name"] = link.catalog_name;
  return out;
}

Json orbit_to_json(const PeriodicOrbit& orbit, const Json& extra) {
  Json o{{"epsilon", orbit.epsilon},
         {"lambda", orbit.lambda},
         {"modes", orbit.modes},
         {"residual_sup", orbit.residual_sup},
         {"min_distance_to_K", orbit.min_distance_to_K},
         {"monodromy_gap", orbit.monodromy_gap},
         {"nondegenerate", orbit.nondegenerate},
         {"z", curve_to_json(orbit.z)}};
  if (orbit.winding) o["winding"] = *orbit.winding;
  for (const auto& [k, v] : extra.items()) o[k] = v;
  return o;
}

Json run_orbits(TaskState& st, const std::string& task_name) {
  const ForceContext& ctx = *st.ctx;
  if (task_name == "nbody" && ctx.curves().component_count() < 2)
    throw ValidationError("nbody task needs a multi-curve set (satellites or a link catalog)");

  std::vector<double> epsilons = st.sc.epsilons;
  if (st.sc.lambda_level) {
    validate_lambda_request(ctx.kernel(), *st.sc.lambda_level);
    epsilons = {epsilon_from_lambda(*st.sc.lambda_level, ctx.kernel().q)};
  }

  const auto& points = need_critical(st);

  BvpOptions bvp;
  bvp.modes = st.sc.modes;

  Json runs = Json::array();
  for (double eps : epsilons) {
    Json run{{"epsilon", eps}, {"lambda", lambda_from_epsilon(eps, ctx.kernel().q)}};
    std::vector<PeriodicOrbit> orbits;
    Json orbit_rows = Json::array();

    // Continuation from every nondegenerate critical point.
    int continued = 0, branch_failures = 0;
    st.component_orbits.clear();
    auto is_known = [&](const PeriodicOrbit& orbit) {
      for (const auto& known : orbits) {
        double sup = 0.0;
        const Mat a = known.z.sample(256), b = orbit.z.sample(256);
        for (int k = 0; k < 256; ++k)
          sup = std::max(sup, (a.col(k) - b.col(k)).norm());
        if (sup < 1e-3) return true;
      }
      return false;
    };
    for (const auto& cp : points) {
      if (cp.degenerate) continue;
      try {
        ContinuationResult branch = continue_in_epsilon(ctx, cp, eps, 400, bvp);
        if (!branch.reached_target || !residual_certified(branch.orbit)) {
          ++branch_failures;
          continue;
        }
        PeriodicOrbit orbit = branch.orbit;
        if (is_known(orbit)) continue;  // two branches met the same orbit
        const MonodromyResult mon = nondegeneracy(ctx, orbit);
        orbit.monodromy_gap = mon.gap;
        orbit.nondegenerate = mon.nondegenerate;
        ++continued;
        if (st.sc.dimension == 2 && st.map) {
          // Label the orbit with the component of its starting point.
          const Vec2 x0(cp.x[0], cp.x[1]);
          const double cell = st.map->cell_size();
          const int i = static_cast<int>((x0.x() - st.map->box_lo[0]) / cell);
          const int jj = static_cast<int>((x0.y() - st.map->box_lo[1]) / cell);
          st.component_orbits.emplace_back(st.map->label_at(i, jj), orbit);
        }
        orbits.push_back(std::move(orbit));
      } catch (const std::exception&) {
        ++branch_failures;
      }
    }
    run["continued_from_critical_points"] = continued;
    run["continuation_failures"] = branch_failures;

    // Winding-stratified and random extra seeds.
    MultistartOptions mopts;
    mopts.bvp = bvp;
    mopts.seed = st.sc.seed;
    mopts.n_random = st.sc.n_random_orbit_seeds;
    if (st.sc.dimension == 2 && st.map) {
      std::set<int> classes;
      for (const auto& comp : st.map->components)
        if (comp.bounded) classes.insert(comp.winding);
      mopts.winding_classes.assign(classes.begin(), classes.end());
    }
    MultistartStats mstats;
    std::vector<PeriodicOrbit> extra =
        multistart_search(ctx, eps, {}, mopts, &mstats);
    for (auto& orbit : extra) {
      if (is_known(orbit)) continue;
      const MonodromyResult mon = nondegeneracy(ctx, orbit);
      orbit.monodromy_gap = mon.gap;
      orbit.nondegenerate = mon.nondegenerate;
      orbits.push_back(std::move(orbit));
    }
    run["multistart"] = Json{{"seeds", mstats.seeds},
                             {"converged", mstats.converged},
                             {"failed_seeds", mstats.failed}};

    // Validity checks per orbit.
    bool residuals_ok = true, lambda_ok = true, apriori_ok = true, physical_ok = true,
         energy_ok = true, distances_ok = true;
    const double d_min = 1e-2 * ctx.curve_radius();
    for (auto& orbit : orbits) {
      Json extra_fields;
      residuals_ok = residuals_ok && residual_certified(orbit);
      distances_ok = distances_ok && orbit.min_distance_to_K > d_min;

      const double eps_back = std::pow(orbit.lambda, -(ctx.kernel().q + 1.0));
      lambda_ok = lambda_ok && std::abs(eps_back - orbit.epsilon) <=
                                   8.0 * std::numeric_limits<double>::epsilon() *
                                       orbit.epsilon;

      if (ctx.curves().component_count() == 1 && orbit.epsilon > 0) {
        const PhysicalOrbit phys = to_physical(ctx, orbit);
        const PeriodicCurve h = ctx.curves().curves[0].derivative(2).scaled(-1.0);
        double h_sup = 0.0, up_sup = 0.0;
        for (int k = 0; k < 512; ++k) {
          const double t = static_cast<double>(k) / 512;
          h_sup = std::max(h_sup, h.eval(t).norm());
          up_sup = std::max(up_sup, phys.u.eval(t, 1).norm());
        }
        const double u_tol = 1e-6 * phys.lambda * h_sup;
        physical_ok = physical_ok && phys.residual_sup < u_tol;
        const double e_res =
            energy_check(phys.u, h, phys.lambda, ctx.kernel().q, ctx.kernel().sign);
        energy_ok = energy_ok && e_res < 1e-6 * phys.lambda * h_sup * up_sup;
        apriori_ok = apriori_ok && phys.min_norm > 1e-6 && phys.max_norm < 1e6;
        extra_fields = Json{{"u_residual", phys.residual_sup},
                            {"energy_residual", e_res},
                            {"u_min", phys.min_norm},
                            {"u_max", phys.max_norm}};
      }
      orbit_rows.push_back(orbit_to_json(orbit, extra_fields));
    }
    const int distinct = distinct_count(orbits);
    run["orbits"] = orbit_rows;
    run["distinct"] = distinct;

    st.check("orbits.residuals", residuals_ok, true,
             "certified collocation residuals within tolerance");
    st.check("orbits.collision_floor", distances_ok, true,
             "orbits stay outside the collision floor");
    st.check("orbits.lambda_epsilon", lambda_ok, true,
             "epsilon = lambda^-(q+1) to machine precision");
    if (ctx.curves().component_count() == 1) {
      st.check("orbits.physical_residual", physical_ok, true,
               "u-form residual below 1e-6 lambda |h|");
      st.check("orbits.energy_identity", energy_ok, true,
               "energy identity residual below tolerance");
      st.check("orbits.apriori_range", apriori_ok, true,
               "|u| within [1e-6, 1e6] on every accepted orbit");
    }

    // Predictions versus found counts.
    if (st.sc.dimension == 2 && st.map) {
      const MultiplicityBounds bounds = multiplicity_bounds(*st.map);
      if (ctx.kernel().sign == ForceSign::attractive) {
        const int predicted = bounds.attractive_bound;
        st.predict("attractive_orbits", predicted, distinct,
                   bounds.r == 0          ? "not_applicable"
                   : distinct >= predicted ? "met"
                                           : "not_met_search_limit",
                   "one orbit per bounded complement component");
      } else {
        const int predicted = bounds.repulsive_bound;
        st.predict("repulsive_orbits", predicted, distinct,
                   bounds.r == 0          ? "not_applicable"
                   : distinct >= predicted ? "met"
                                           : "not_met_search_limit",
                   "winding-stratified count r + s; unmet classes reflect search "
                   "limits, not disproof");
        // Per winding class: components in the class plus one extra solution.
        Json classes = Json::array();
        std::map<int, int> comp_count, found_count;
        for (const auto& comp : st.map->components)
          if (comp.bounded) ++comp_count[comp.winding];
        for (const auto& orbit : orbits)
          if (orbit.winding) ++found_count[*orbit.winding];
        for (const auto& [w, count] : comp_count) {
          const int class_pred = count + 1;
          const int class_found = found_count.count(w) ? found_count[w] : 0;
          classes.push_back(Json{{"winding", w},
                                 {"predicted", class_pred},
                                 {"found", class_found},
                                 {"status", class_found >= class_pred
                                                ? "met"
                                                : "not_met_search_limit"}});
        }
        run["winding_classes"] = classes;
      }
    } else if (st.sc.dimension == 3 && st.link) {
      const Bounds3d bounds = bounds_3d(*st.link);
      st.predict("degree_bound_orbits", bounds.degree_bound, distinct,
                 distinct >= bounds.degree_bound ? "met" : "not_met_search_limit",
                 "generic lower bound r - c + 1");
      if (bounds.morse_bound)
        st.predict("morse_bound_orbits", *bounds.morse_bound, distinct,
                   distinct >= *bounds.morse_bound ? "met" : "not_met_search_limit",
                   "tunnel-number bound 2t + 1");
    }
    runs.push_back(run);
  }
  return Json{{"runs", runs}};
}

}  // namespace

RunOutcome run_scenario(const Scenario& sc, const RunOptions& opts) {
  namespace fs = std::filesystem;
  const auto t0 = std::chrono::steady_clock::now();

  Scenario scenario = sc;
  if (opts.seed_override) scenario.seed = *opts.seed_override;
  if (!opts.out_override.empty()) scenario.output_dir = opts.out_override;

  // Cache lookup: keyed by the scenario content (with the effective seed) and
  // the artifact version.
  Json key_doc = scenario.raw;
  key_doc["solver"]["seed"] = scenario.seed;
  key_doc["__version"] = "keptop-0.1.0";
  const std::string key = fnv1a_hex(canonical_dump(key_doc));
  const fs::path cache_dir = cache_directory(scenario.output_dir);
  const fs::path cache_file = cache_dir / (key + ".json");
  const fs::path report_path = fs::path(scenario.output_dir) / "report.json";

  RunOutcome outcome;
  outcome.report_path = report_path.string();
  if (opts.use_cache && fs::exists(cache_file)) {
    outcome.report = load_json(cache_file.string());
    outcome.from_cache = true;
    outcome.hard_failures = outcome.report.value("hard_failures", 0);
    atomic_write(report_path.string(), outcome.report.dump(2) + "\n");
    return outcome;
  }

  TaskState st(scenario);
  st.curves = build_curves(scenario);
  st.ctx.emplace(st.curves, scenario.kernel, scenario.quadrature_nodes);

  Json tasks;
  // Dependency order: curve-level analyses first, then field tasks, orbits last.
  std::vector<std::string> ordered;
  for (const char* phase : {"analyze2d", "knots3d", "degree", "critical", "orbits", "nbody"})
    for (const auto& t : scenario.tasks)
      if (t == phase) ordered.push_back(t);

  for (const auto& task : ordered) {
    try {
      if (task == "analyze2d") tasks[task] = run_analyze2d(st);
      else if (task == "degree") tasks[task] = run_degree(st);
      else if (task == "critical") tasks[task] = run_critical(st);
      else if (task == "knots3d") tasks[task] = run_knots3d(st);
      else tasks[task] = run_orbits(st, task);
    } catch (const std::exception& e) {
      tasks[task] = Json{{"error", e.what()}};
      st.check(task + ".completed", false, true, e.what());
    }
  }

  const auto t1 = std::chrono::steady_clock::now();
  const double wall = std::chrono::duration<double>(t1 - t0).count();

  Json report{{"name", scenario.name},
              {"scenario", scenario.raw},
              {"tasks", tasks},
              {"checks", st.checks},
              {"predictions", st.predictions},
              {"hard_failures", st.hard_failures}};
  report["scenario"]["solver"]["seed"] = scenario.seed;
  report["provenance"] = Json{{"version", "keptop-0.1.0"},
                              {"seed", scenario.seed},
                              {"quadrature_nodes", scenario.quadrature_nodes},
                              {"resolution", scenario.resolution},
                              {"modes", scenario.modes},
                              {"delta_erode", scenario.delta_erode},
                              {"cache_key", key},
                              {"timestamp", static_cast<std::int64_t>(std::time(nullptr))},
                              {"wall_time_seconds", wall}};
  seal_report(report);

  outcome.report = report;
  outcome.hard_failures = st.hard_failures;
  atomic_write(report_path.string(), report.dump(2) + "\n");
  atomic_write(cache_file.string(), report.dump(2) + "\n");

  // Plots for whatever the report contains.
  try {
    if (scenario.dimension == 2 && st.map) {
      std::vector<std::pair<int, Mat>> traces;
      if (tasks.contains("orbits") && !tasks["orbits"].contains("error"))
        for (const auto& run : tasks["orbits"]["runs"])
          for (const auto& row : run["orbits"]) {
            const PeriodicCurve z = curve_from_json(row["z"]);
            traces.emplace_back(row.value("winding", 0), z.sample(256));
          }
      std::vector<Vec2> crits;
      for (const auto& cp : st.critical) crits.emplace_back(cp.x[0], cp.x[1]);
      atomic_write((fs::path(scenario.output_dir) / "map.svg").string(),
                   svg_map(*st.map, traces, crits));
    }
    if (scenario.dimension == 3) {
      std::vector<Mat> polys;
      for (const auto& c : st.curves.curves) polys.push_back(c.sample(512));
      std::vector<Vec> crits;
      for (const auto& cp : st.critical) crits.push_back(cp.x);
      std::vector<Mat> traces;
      for (const char* tn : {"orbits", "nbody"})
        if (tasks.contains(tn) && !tasks[tn].contains("error"))
          for (const auto& run : tasks[tn]["runs"])
            for (const auto& row : run["orbits"])
              traces.push_back(curve_from_json(row["z"]).sample(256));
      atomic_write((fs::path(scenario.output_dir) / "projections.svg").string(),
                   svg_projections(polys, crits, traces));
    }
  } catch (const std::exception& e) {
    // Plot failures must not invalidate the numeric run.
    std::cerr << "plot generation failed: " << e.what() << "\n";
  }
  return outcome;
}

// ---------------------------------------------------------------------------
// Verification
// ---------------------------------------------------------------------------

namespace {

struct VerifyPrinter {
  std::ostream& out;
  int failures = 0;
  void row(const std::string& name, const std::string& status, const std::string& detail) {
    out << (status == "FAIL" ? "[FAIL] " : status == "ok" ? "[ ok ] " : "[ -- ] ") << name;
    if (!detail.empty()) out << "  (" << detail << ")";
    out << "\n";
    if (status == "FAIL") ++failures;
  }
  void result(const std::string& name, bool passed, const std::string& detail = "") {
    row(name, passed ? "ok" : "FAIL", detail);
  }
  void na(const std::string& name) { row(name, "--", "not_applicable"); }
};

}  // namespace

int verify_report(const Json& input, std::ostream& out) {
  VerifyPrinter p{out};

  Json report = input;
  if (!input.contains("tasks")) {
    // A scenario: run it fresh (no cache) and verify the outcome.
    const Scenario sc = parse_scenario(input);
    RunOptions opts;
    opts.use_cache = false;
    report = run_scenario(sc, opts).report;
  } else {
    p.result("report.content_hash", report_hash_matches(report),
             "stored hash matches recomputed content hash");
  }

  const Scenario sc = parse_scenario(report["scenario"]);
  const CurveSet curves = build_curves(sc);
  const ForceContext ctx(curves, sc.kernel, sc.quadrature_nodes);
  const Json& tasks = report["tasks"];

  // Stored checks replay.
  int stored_failed = 0;
  for (const auto& c : report["checks"])
    if (!c["passed"].get<bool>() && c["hard"].get<bool>()) ++stored_failed;
  p.result("report.hard_checks", stored_failed == 0,
           std::to_string(stored_failed) + " hard check failure(s) recorded");

  // Gradient spot check against finite differences at stored critical points.
  if (tasks.contains("critical") && !tasks["critical"].contains("error")) {
    bool ok = true;
    int used = 0;
    for (const auto& row : tasks["critical"]["points"]) {
      if (++used > 5) break;
      Vec x(sc.dimension);
      for (int i = 0; i < sc.dimension; ++i) x[i] = row["x"][i].get<double>();
      ok = ok && ctx.grad_G(x).norm() < 1e-8 * (1.0 + std::abs(ctx.G(x)));
    }
    p.result("critical.gradients_recheck", ok, std::to_string(used) + " point(s) re-evaluated");

    if (tasks["critical"].contains("census") &&
        !tasks["critical"]["census"].contains("refused")) {
      const Json& c = tasks["critical"]["census"];
      const bool identity = c["m2"].get<int>() - c["m1"].get<int>() ==
                            c["m3"].get<int>() + 1;
      if (c["exhaustive"].get<bool>())
        p.result("critical.census_identity", identity);
      else
        p.na("critical.census_identity");
    }
  } else {
    p.na("critical.gradients_recheck");
  }

  // Degree refinement stability for the far field.
  if (tasks.contains("degree") && !tasks["degree"].contains("error")) {
    const VectorField minus_grad = [&ctx](const Vec& x) { return Vec(-ctx.grad_G(x)); };
    const double R = tasks["degree"]["far_field"]["radius"].get<double>();
    const int stored = tasks["degree"]["far_field"]["degree"].get<int>();
    int recomputed;
    const Vec c = ctx.curve_center();
    if (sc.dimension == 2) {
      Loop2 big;
      for (int k = 0; k < 1024; ++k)
        big.emplace_back(c[0] + R * std::cos(kTwoPi * k / 1024),
                         c[1] + R * std::sin(kTwoPi * k / 1024));
      recomputed = degree_2d(minus_grad, {big}).value;
    } else {
      recomputed =
          degree_3d(minus_grad, sphere_surface(Vec3(c[0], c[1], c[2]), R), 128, 256).value;
    }
    p.result("degree.refinement_stability", recomputed == stored,
             "far-field degree re-evaluated at doubled boundary resolution");
  } else {
    p.na("degree.refinement_stability");
  }

  // Orbit residual and energy recheck from stored coefficients.
  bool saw_orbits = false;
  for (const char* tn : {"orbits", "nbody"}) {
    if (!tasks.contains(tn) || tasks[tn].contains("error")) continue;
    for (const auto& run : tasks[tn]["runs"]) {
      for (const auto& row : run["orbits"]) {
        saw_orbits = true;
        PeriodicOrbit orbit;
        orbit.epsilon = row["epsilon"].get<double>();
        orbit.lambda = row["lambda"].get<double>();
        orbit.modes = row["modes"].get<int>();
        orbit.z = curve_from_json(row["z"]);

        double res = 0.0;
        const int Mf = 4 * (2 * orbit.modes + 1);
        const double sigma = ctx.kernel().sign_factor();
        for (int k = 0; k < Mf; ++k) {
          const double t = static_cast<double>(k) / Mf;
          const Vec z = orbit.z.eval(t);
          Vec f = Vec::Zero(sc.dimension);
          for (const auto& curve : ctx.curves().curves) {
            const Vec u = z - curve.eval(t);
            f -= sigma * u * std::pow(u.norm(), -(ctx.kernel().q + 1.0));
          }
          res = std::max(res,
                         (orbit.z.eval(t, 2) - orbit.epsilon * f).cwiseAbs().maxCoeff());
        }
        const double stored_res = row["residual_sup"].get<double>();
        p.result("orbits.residual_recheck",
                 res <= 2.0 * stored_res + 1e-12,
                 "recomputed " + fmt(res) + " vs stored " + fmt(stored_res));

        if (ctx.curves().component_count() == 1 && orbit.epsilon > 0) {
          const PhysicalOrbit phys = to_physical(ctx, orbit);
          const PeriodicCurve h = ctx.curves().curves[0].derivative(2).scaled(-1.0);
          const double e_res =
              energy_check(phys.u, h, phys.lambda, ctx.kernel().q, ctx.kernel().sign);
          const double stored_e = row["energy_residual"].get<double>();
          p.result("orbits.energy_recheck", e_res <= 2.0 * stored_e + 1e-12,
                   "recomputed " + fmt(e_res) + " vs stored " + fmt(stored_e));
        }
      }
    }
  }
  if (!saw_orbits) {
    p.na("orbits.residual_recheck");
    p.na("orbits.energy_recheck");
  }

  out << (p.failures == 0 ? "VERIFY PASS" : "VERIFY FAIL") << " (" << p.failures
      << " failure(s))\n";
  return p.failures;
}

}  // namespace keptop
