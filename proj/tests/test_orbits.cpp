#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "keptop/critical.hpp"
#include "keptop/orbits.hpp"

using namespace keptop;

namespace {

ForceContext circle_ctx(ForceSign sign = ForceSign::attractive) {
  return ForceContext(catalog("circle"), Kernel{2.0, sign});
}

CriticalPoint center_point(const ForceContext& ctx) {
  const auto points = find_critical_points(ctx, default_search_box(ctx), {.n_starts = 120});
  REQUIRE(points.size() >= 1);
  return points[0];
}

// Independent time-stepping shooting oracle: fixed-step classical RK4 on
// z'' = eps f(z, t) with a finite-difference Newton iteration on the
// periodicity map (z(1), z'(1)) = (z(0), z'(0)).
struct ShootingOracle {
  const ForceContext& ctx;
  double eps;
  int steps = 4096;

  Vec rhs_force(const Vec& z, double t) const {
    const double q = ctx.kernel().q;
    Vec f = Vec::Zero(z.size());
    for (const auto& curve : ctx.curves().curves) {
      const Vec u = z - curve.eval(t);
      f -= std::pow(u.norm(), -(q + 1.0)) * u;
    }
    return ctx.kernel().sign_factor() * eps * f;
  }

  Vec flow(const Vec& y0) const {
    const int n = static_cast<int>(y0.size()) / 2;
    Vec y = y0;
    const double h = 1.0 / steps;
    auto deriv = [&](const Vec& state, double t) {
      Vec d(2 * n);
      d.head(n) = state.tail(n);
      d.tail(n) = rhs_force(state.head(n), t);
      return d;
    };
    for (int i = 0; i < steps; ++i) {
      const double t = static_cast<double>(i) / steps;
      const Vec k1 = deriv(y, t);
      const Vec k2 = deriv(y + 0.5 * h * k1, t + 0.5 * h);
      const Vec k3 = deriv(y + 0.5 * h * k2, t + 0.5 * h);
      const Vec k4 = deriv(y + h * k3, t + h);
      y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    return y;
  }

  // Newton on y0 -> flow(y0) - y0 with a finite-difference Jacobian.
  Vec solve(Vec y0) const {
    const int m = static_cast<int>(y0.size());
    for (int it = 0; it < 30; ++it) {
      const Vec r = flow(y0) - y0;
      if (r.norm() < 1e-11) break;
      Mat J(m, m);
      const double d = 1e-7;
      for (int j = 0; j < m; ++j) {
        Vec e = Vec::Zero(m);
        e[j] = d;
        J.col(j) = ((flow(y0 + e) - (y0 + e)) - r) / d;
      }
      y0 += J.fullPivLu().solve(-r);
    }
    return y0;
  }
};

}  // namespace

TEST_CASE("lambda-epsilon relation") {
  CHECK(lambda_from_epsilon(1e-3, 2.0) == doctest::Approx(10.0).epsilon(1e-14));
  CHECK(epsilon_from_lambda(10.0, 2.0) == doctest::Approx(1e-3).epsilon(1e-14));
  CHECK(std::isinf(lambda_from_epsilon(0.0, 2.0)));
  CHECK_THROWS_AS(epsilon_from_lambda(0.0, 2.0), ValidationError);
}

TEST_CASE("lambda zero requests are refused") {
  CHECK_THROWS_AS(validate_lambda_request(Kernel{2.0, ForceSign::repulsive}, 0.0),
                  ValidationError);
  CHECK_THROWS_AS(validate_lambda_request(Kernel{2.0, ForceSign::attractive}, 0.0),
                  ValidationError);
  CHECK_NOTHROW(validate_lambda_request(Kernel{2.0, ForceSign::repulsive}, 10.0));
  try {
    validate_lambda_request(Kernel{2.0, ForceSign::repulsive}, 0.0);
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("no periodic solutions at lambda = 0") !=
          std::string::npos);
  }
}

TEST_CASE("constant orbit at epsilon zero") {
  const ForceContext ctx = circle_ctx();
  const CriticalPoint cp = center_point(ctx);
  const PeriodicOrbit orbit = solve_bvp_constant(ctx, 0.0, cp.x, {.modes = 16});
  CHECK((orbit.z.eval(0.37) - cp.x).norm() < 1e-9);
  CHECK(orbit.residual_sup < 1e-9);
  CHECK(std::isinf(orbit.lambda));
}

TEST_CASE("circle orbit matches the shooting oracle") {
  const ForceContext ctx = circle_ctx();
  const CriticalPoint cp = center_point(ctx);
  const double eps = 1e-3;
  const ContinuationResult branch = continue_in_epsilon(ctx, cp, eps, 400, {.modes = 32});
  REQUIRE(branch.reached_target);
  const PeriodicOrbit& orbit = branch.orbit;
  CHECK(orbit.residual_sup < 1e-10);
  CHECK((orbit.z.eval(0.0) - cp.x).norm() < 0.1);

  ShootingOracle oracle{ctx, eps};
  Vec y0(4);
  y0 << orbit.z.eval(0.0), orbit.z.eval(0.0, 1);
  const Vec y_star = oracle.solve(y0);
  CHECK((oracle.flow(y_star) - y_star).norm() < 1e-9);
  // Same orbit: the collocation initial state sits on the oracle's fixed point.
  CHECK((y_star.head(2) - orbit.z.eval(0.0)).norm() < 1e-7);
  CHECK((y_star.tail(2) - orbit.z.eval(0.0, 1)).norm() < 1e-6);
}

TEST_CASE("repulsive continuation from the circle center also reaches target") {
  const ForceContext ctx = circle_ctx(ForceSign::repulsive);
  const CriticalPoint cp = center_point(ctx);
  const ContinuationResult branch = continue_in_epsilon(ctx, cp, 1e-3, 400, {.modes = 32});
  CHECK(branch.reached_target);
  const MonodromyResult mon = nondegeneracy(ctx, branch.orbit);
  CHECK(mon.nondegenerate);
}

TEST_CASE("degenerate start points are refused") {
  const ForceContext ctx = circle_ctx();
  CriticalPoint cp = center_point(ctx);
  cp.degenerate = true;
  CHECK_THROWS_AS(continue_in_epsilon(ctx, cp, 1e-3), ValidationError);
}

TEST_CASE("physical map and residual") {
  const ForceContext ctx = circle_ctx();
  const CriticalPoint cp = center_point(ctx);
  const ContinuationResult branch = continue_in_epsilon(ctx, cp, 1e-3, 400, {.modes = 32});
  REQUIRE(branch.reached_target);
  const PhysicalOrbit phys = to_physical(ctx, branch.orbit);

  CHECK(phys.lambda == doctest::Approx(10.0).epsilon(1e-12));
  const PeriodicCurve h = ctx.curves().curves[0].derivative(2).scaled(-1.0);
  double h_sup = 0.0;
  for (int k = 0; k < 512; ++k)
    h_sup = std::max(h_sup, h.eval(k / 512.0).norm());
  CHECK(phys.residual_sup < 1e-6 * phys.lambda * h_sup);
  CHECK(phys.min_norm > 1e-6);
  CHECK(phys.max_norm < 1e6);

  // u = lambda (z - H) pointwise.
  for (double t : {0.0, 0.31, 0.77}) {
    const Vec expected =
        phys.lambda * (branch.orbit.z.eval(t) - ctx.curves().curves[0].eval(t));
    CHECK((phys.u.eval(t) - expected).norm() < 1e-10 * (1.0 + expected.norm()));
  }
}

TEST_CASE("energy identity holds for accepted orbits and fails for perturbed ones") {
  const ForceContext ctx = circle_ctx();
  const CriticalPoint cp = center_point(ctx);
  const ContinuationResult branch = continue_in_epsilon(ctx, cp, 1e-3, 400, {.modes = 32});
  REQUIRE(branch.reached_target);
  const PhysicalOrbit phys = to_physical(ctx, branch.orbit);
  const PeriodicCurve h = ctx.curves().curves[0].derivative(2).scaled(-1.0);

  double h_sup = 0.0, up_sup = 0.0;
  for (int k = 0; k < 512; ++k) {
    h_sup = std::max(h_sup, h.eval(k / 512.0).norm());
    up_sup = std::max(up_sup, phys.u.eval(k / 512.0, 1).norm());
  }
  const double res = energy_check(phys.u, h, phys.lambda, 2.0, ForceSign::attractive);
  CHECK(res < 1e-6 * phys.lambda * h_sup * up_sup);

  // Negative control: an orbit-shaped curve that solves nothing.
  std::map<int, Eigen::VectorXcd> wiggle_modes;
  Eigen::VectorXcd c2(2);
  c2 << std::complex<double>(0.01, 0.0), std::complex<double>(0.0, 0.01);
  wiggle_modes[2] = c2;
  const PeriodicCurve wiggle = PeriodicCurve::from_modes(2, wiggle_modes);
  const PeriodicCurve u_bad = phys.u.plus(wiggle);
  const double res_bad = energy_check(u_bad, h, phys.lambda, 2.0, ForceSign::attractive);
  CHECK(res_bad > 1e-2);
}

TEST_CASE("trivial energy identity for a resting particle") {
  std::map<int, Eigen::VectorXcd> modes;
  Eigen::VectorXcd c0(2);
  c0 << 2.0, 0.0;
  modes[0] = c0;
  const PeriodicCurve constant_u = PeriodicCurve::from_modes(2, modes);
  const PeriodicCurve zero_h =
      PeriodicCurve::from_coefficients(Eigen::MatrixXcd::Zero(2, 1));
  CHECK(energy_check(constant_u, zero_h, 0.0, 2.0, ForceSign::repulsive) < 1e-14);
}

TEST_CASE("monodromy at epsilon zero is unipotent, at small epsilon nondegenerate") {
  const ForceContext ctx = circle_ctx();
  const CriticalPoint cp = center_point(ctx);
  const PeriodicOrbit rest = solve_bvp_constant(ctx, 0.0, cp.x, {.modes = 16});
  const MonodromyResult flat = nondegeneracy(ctx, rest);
  CHECK(flat.gap < 1e-12);
  CHECK_FALSE(flat.nondegenerate);
  // v'' = 0 gives v(1) = v(0) + v'(0).
  CHECK((flat.monodromy.block(0, 2, 2, 2) - Mat::Identity(2, 2)).norm() < 1e-9);

  const ContinuationResult branch = continue_in_epsilon(ctx, cp, 1e-3, 400, {.modes = 32});
  REQUIRE(branch.reached_target);
  const MonodromyResult mon = nondegeneracy(ctx, branch.orbit);
  CHECK(mon.nondegenerate);
  CHECK(mon.gap > 1e-8 * mon.monodromy.norm());
}

TEST_CASE("orbit is stable under mode refinement") {
  const ForceContext ctx = circle_ctx();
  const CriticalPoint cp = center_point(ctx);
  const ContinuationResult b32 = continue_in_epsilon(ctx, cp, 1e-3, 400, {.modes = 32});
  const ContinuationResult b64 = continue_in_epsilon(ctx, cp, 1e-3, 400, {.modes = 64});
  REQUIRE(b32.reached_target);
  REQUIRE(b64.reached_target);
  double sup = 0.0;
  for (int k = 0; k < 512; ++k) {
    const double t = static_cast<double>(k) / 512;
    sup = std::max(sup, (b32.orbit.z.eval(t) - b64.orbit.z.eval(t)).norm());
  }
  CHECK(sup < 1e-8);
}

TEST_CASE("distinct count clusters duplicates") {
  const ForceContext ctx = circle_ctx();
  const CriticalPoint cp = center_point(ctx);
  const ContinuationResult branch = continue_in_epsilon(ctx, cp, 1e-3, 400, {.modes = 16});
  REQUIRE(branch.reached_target);
  CHECK(distinct_count({}) == 0);
  CHECK(distinct_count({branch.orbit}) == 1);
  CHECK(distinct_count({branch.orbit, branch.orbit}) == 1);
}

TEST_CASE("near-collision guesses are rejected") {
  const ForceContext ctx = circle_ctx();
  Vec on_curve(2);
  on_curve << 1.0 + 1e-4, 0.0;
  CHECK_THROWS_AS(solve_bvp_constant(ctx, 1e-3, on_curve, {.modes = 16}),
                  NearCollisionError);
}

TEST_CASE("repulsive problem over a segment finds no orbits") {
  const ForceContext ctx(catalog("segment"), Kernel{2.0, ForceSign::repulsive});
  MultistartOptions opts;
  opts.bvp.modes = 16;
  opts.n_random = 24;
  MultistartStats stats;
  const auto orbits = multistart_search(ctx, 1e-3, {}, opts, &stats);
  CHECK(orbits.empty());
  CHECK(stats.failed == stats.seeds);
}

TEST_CASE("orbit winding tags label the planar classes") {
  const ForceContext ctx = circle_ctx();
  const CriticalPoint cp = center_point(ctx);
  const ContinuationResult branch = continue_in_epsilon(ctx, cp, 1e-3, 400, {.modes = 32});
  REQUIRE(branch.reached_target);
  REQUIRE(branch.orbit.winding.has_value());
  // z stays near the center, so u = z - H winds like -H around 0.
  CHECK(*branch.orbit.winding == 1);
}
