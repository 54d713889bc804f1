#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "keptop/critical.hpp"
#include "keptop/degree.hpp"

using namespace keptop;

namespace {

// Exhaustive sign-scan oracle: count sign changes of grad G over a fine grid
// by locating cells whose corners bracket zero in both components. Confirms
// uniqueness independently of the Newton search.
int grid_scan_zero_cells(const ForceContext& ctx, double lo, double hi, int n) {
  Mat gx(n + 1, n + 1), gy(n + 1, n + 1);
  for (int i = 0; i <= n; ++i)
    for (int j = 0; j <= n; ++j) {
      Vec x(2);
      x << lo + (hi - lo) * i / n, lo + (hi - lo) * j / n;
      try {
        const Vec g = ctx.grad_G(x);
        gx(i, j) = g[0];
        gy(i, j) = g[1];
      } catch (const ProximityError&) {
        gx(i, j) = gy(i, j) = std::numeric_limits<double>::quiet_NaN();
      }
    }
  int cells = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double minx = 1e300, maxx = -1e300, miny = 1e300, maxy = -1e300;
      bool ok = true;
      for (int di = 0; di <= 1; ++di)
        for (int dj = 0; dj <= 1; ++dj) {
          if (std::isnan(gx(i + di, j + dj))) ok = false;
          minx = std::min(minx, gx(i + di, j + dj));
          maxx = std::max(maxx, gx(i + di, j + dj));
          miny = std::min(miny, gy(i + di, j + dj));
          maxy = std::max(maxy, gy(i + di, j + dj));
        }
      if (ok && minx < 0 && maxx > 0 && miny < 0 && maxy > 0) ++cells;
    }
  return cells;
}

}  // namespace

TEST_CASE("circle in the plane has exactly one critical point at the center") {
  const ForceContext ctx(catalog("circle"), Kernel{2.0, ForceSign::attractive});
  SearchStats stats;
  const auto points =
      find_critical_points(ctx, default_search_box(ctx), {.n_starts = 200}, &stats);

  REQUIRE(points.size() == 1);
  CHECK(points[0].x.norm() < 1e-6);
  CHECK(points[0].morse_index == 0);
  CHECK(points[0].local_degree == 1);
  CHECK_FALSE(points[0].degenerate);
  CHECK(points[0].fd_ok);
  CHECK(points[0].grad_norm < 1e-9 * (1.0 + std::abs(points[0].G_value)));
  CHECK(stats.converged > 0);

  // Grid-scan oracle over the component interior (safely inside the curve,
  // where the field is smooth): the only sign-change cluster is the center.
  const int cells = grid_scan_zero_cells(ctx, -0.6, 0.6, 200);
  CHECK(cells >= 1);
  CHECK(cells <= 4);  // one zero can touch at most a few adjacent cells
}

TEST_CASE("unknot in space has one index-1 critical point at the center") {
  const ForceContext ctx(catalog("unknot"), Kernel{2.0, ForceSign::attractive});
  const auto points =
      find_critical_points(ctx, default_search_box(ctx), {.n_starts = 300});

  REQUIRE(points.size() == 1);
  const CriticalPoint& cp = points[0];
  CHECK(cp.x.norm() < 1e-6);
  CHECK(cp.morse_index == 1);  // the axis direction is the negative one
  CHECK(cp.local_degree == -1);
  CHECK_FALSE(cp.degenerate);

  // Axial closed form: G(0,0,z) = (1+z^2)^{-1/2} has a maximum at z = 0, so
  // the axial eigenvalue is negative while the radial pair is positive.
  CHECK(cp.eigenvalues[0] < 0);
  CHECK(cp.eigenvalues[1] > 0);
  CHECK(cp.eigenvalues[2] > 0);
}

TEST_CASE("unknot census satisfies the index identity") {
  const ForceContext ctx(catalog("unknot"), Kernel{2.0, ForceSign::attractive});
  const auto points =
      find_critical_points(ctx, default_search_box(ctx), {.n_starts = 300});
  const MorseCensus census = morse_census(ctx, points);
  CHECK(census.m1 == 0);
  CHECK(census.m2 == 1);
  CHECK(census.m3 == 0);
  CHECK(census.identity_holds);
  CHECK(census.degree_sum == 1);
  CHECK(census.far_field_degree == 1);
  CHECK(census.exhaustive);
}

TEST_CASE("local degree over a small sphere matches the Morse index") {
  const ForceContext ctx(catalog("unknot"), Kernel{2.0, ForceSign::attractive});
  const auto points =
      find_critical_points(ctx, default_search_box(ctx), {.n_starts = 200});
  REQUIRE(points.size() == 1);
  const Vec3 c(points[0].x[0], points[0].x[1], points[0].x[2]);

  const VectorField grad = [&](const Vec& x) { return ctx.grad_G(x); };
  const VectorField minus_grad = [&](const Vec& x) { return Vec(-ctx.grad_G(x)); };
  const DegreeResult d1 = degree_3d(grad, sphere_surface(c, 0.05));
  const DegreeResult d2 = degree_3d(minus_grad, sphere_surface(c, 0.05));
  CHECK(d1.value == points[0].local_degree);   // (-1)^index
  CHECK(d2.value == -d1.value);                // (-1)^n in R^3
}

TEST_CASE("synthetic quartic Hessian is flagged degenerate") {
  // Hessian of x^4 + y^2 at the origin.
  Mat h = Mat::Zero(2, 2);
  h(1, 1) = 2.0;
  const SpectrumClassification c = classify_spectrum(h);
  CHECK(c.degenerate);

  Mat good(2, 2);
  good << 2.0, 0.0, 0.0, -3.0;
  const SpectrumClassification c2 = classify_spectrum(good);
  CHECK_FALSE(c2.degenerate);
  CHECK(c2.morse_index == 1);
  CHECK(c2.local_degree == -1);
}

TEST_CASE("census refuses degenerate points") {
  const ForceContext ctx(catalog("unknot"), Kernel{2.0, ForceSign::attractive});
  auto points = find_critical_points(ctx, default_search_box(ctx), {.n_starts = 100});
  REQUIRE(!points.empty());
  points[0].degenerate = true;
  CHECK_THROWS_AS(morse_census(ctx, points), ValidationError);
}

TEST_CASE("no critical point is a local maximum when q >= n-1") {
  const ForceContext ctx(catalog("trefoil"), Kernel{2.0, ForceSign::attractive});
  const auto points =
      find_critical_points(ctx, default_search_box(ctx), {.n_starts = 150});
  for (const auto& cp : points) CHECK(cp.morse_index < 3);
}

TEST_CASE("epicycloid components each hold a critical point") {
  const ForceContext ctx(catalog("epicycloid"), Kernel{2.0, ForceSign::attractive});
  const auto points =
      find_critical_points(ctx, default_search_box(ctx), {.n_starts = 300});
  CHECK(points.size() >= 5);
  for (const auto& cp : points) {
    CHECK(cp.grad_norm < 1e-9 * (1.0 + std::abs(cp.G_value)));
    CHECK(cp.distance_to_K > 5e-3);
    CHECK(cp.fd_ok);
  }
}

TEST_CASE("doubling the start count leaves the point set unchanged") {
  const ForceContext ctx(catalog("circle"), Kernel{2.0, ForceSign::attractive});
  const Box box = default_search_box(ctx);
  const auto a = find_critical_points(ctx, box, {.n_starts = 100});
  const auto b = find_critical_points(ctx, box, {.n_starts = 200});
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) CHECK((a[i].x - b[i].x).norm() < 1e-7);
}

TEST_CASE("tunnel-number bound check") {
  CHECK(knot_bound_check(1, 0));
  CHECK(knot_bound_check(3, 1));
  CHECK_FALSE(knot_bound_check(2, 1));
  CHECK(knot_bound_check(5, 2));
  CHECK_FALSE(knot_bound_check(4, 2));
}
