#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "keptop/field.hpp"

using namespace keptop;

namespace {

Vec vec2(double x, double y) {
  Vec v(2);
  v << x, y;
  return v;
}

Vec vec3(double x, double y, double z) {
  Vec v(3);
  v << x, y, z;
  return v;
}

ForceContext circle_ctx(int nodes = 256, ForceSign sign = ForceSign::attractive) {
  return ForceContext(catalog("circle"), Kernel{2.0, sign}, nodes);
}

// Random point at distance >= dmin from the context's curves.
Vec admissible_point(const ForceContext& ctx, UniformRng& rng, double dmin) {
  const double r = ctx.curve_radius();
  const Vec c = ctx.curve_center();
  for (int attempt = 0; attempt < 1000; ++attempt) {
    Vec x(ctx.dimension());
    for (int i = 0; i < x.size(); ++i) x[i] = c[i] + rng.uniform(-2.5 * r, 2.5 * r);
    if (ctx.distance_to_curves(x) > dmin) return x;
  }
  throw std::runtime_error("no admissible point found");
}

}  // namespace

TEST_CASE("kernel values") {
  CHECK(g_eval(vec2(0.0, 1.0), 2.0) == doctest::Approx(1.0));
  CHECK(g_eval(vec2(0.0, 1.0), 3.5) == doctest::Approx(1.0));
  CHECK(g_eval(vec2(2.0, 0.0), 2.0) == doctest::Approx(0.5));
  CHECK(g_eval(vec3(2.0, 0.0, 0.0), 3.0) == doctest::Approx(0.25));
  CHECK_THROWS_AS(g_eval(vec2(0.0, 0.0), 2.0), SingularityError);
}

TEST_CASE("kernel gradient") {
  const Vec g = grad_g(vec2(1.0, 0.0), 2.0);
  CHECK(g[0] == doctest::Approx(-1.0));
  CHECK(g[1] == doctest::Approx(0.0));
  CHECK_THROWS_AS(grad_g(vec3(0, 0, 0), 2.0), SingularityError);
}

TEST_CASE("kernel Hessian trace matches the closed form") {
  // trace hess_g = (q-1)(q+1-n) |u|^{-(q+1)}; harmonic at q = n-1.
  CHECK(hess_g(vec3(1.0, 0.0, 0.0), 2.0).trace() == doctest::Approx(0.0).epsilon(1e-14));
  UniformRng rng(3);
  for (int i = 0; i < 10; ++i) {
    const double q = rng.uniform(2.0, 4.0);
    Vec u = vec3(rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2));
    if (u.norm() < 0.1) u[0] += 1.0;
    const double expected = (q - 1.0) * (q + 1.0 - 3.0) * std::pow(u.norm(), -(q + 1.0));
    CHECK(hess_g(u, q).trace() == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("kernel Hessian agrees with finite differences of the gradient") {
  UniformRng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = trial % 2 == 0 ? 2 : 3;
    const double q = rng.uniform(2.0, 4.0);
    Vec u(n);
    for (int i = 0; i < n; ++i) u[i] = rng.uniform(0.5, 2.0) * (rng.next_double() < 0.5 ? -1 : 1);
    const Mat H = hess_g(u, q);
    const double h = 1e-6 * u.norm();
    Mat fd(n, n);
    for (int j = 0; j < n; ++j) {
      Vec e = Vec::Zero(n);
      e[j] = h;
      fd.col(j) = (grad_g(u + e, q) - grad_g(u - e, q)) / (2.0 * h);
    }
    CHECK((H - fd).norm() < 1e-6 * H.norm());
  }
}

TEST_CASE("averaged potential of the unit circle at the center") {
  const ForceContext ctx = circle_ctx();
  CHECK(ctx.G(vec2(0.0, 0.0)) == doctest::Approx(1.0).epsilon(1e-13));
}

TEST_CASE("averaged potential of the unknot on its axis") {
  const ForceContext ctx(catalog("unknot"), Kernel{2.0, ForceSign::attractive});
  for (double z : {0.0, 0.5, 1.3}) {
    const double expected = 1.0 / std::sqrt(1.0 + z * z);
    CHECK(ctx.G(vec3(0.0, 0.0, z)) == doctest::Approx(expected).epsilon(1e-13));
  }
}

TEST_CASE("averaged force vanishes at the circle center") {
  const ForceContext ctx = circle_ctx();
  CHECK(ctx.F(vec2(0.0, 0.0)).norm() < 1e-14);
}

TEST_CASE("F equals -grad G / (q-1)") {
  const ForceContext ctx(catalog("epicycloid"), Kernel{2.5, ForceSign::attractive});
  UniformRng rng(5);
  for (int i = 0; i < 15; ++i) {
    const Vec x = admissible_point(ctx, rng, 0.3);
    const Vec f = ctx.F(x);
    const Vec g = ctx.grad_G(x);
    CHECK((f + g / (2.5 - 1.0)).norm() <= 1e-10 * std::max(1e-30, f.norm()) + 1e-300);
  }
}

TEST_CASE("far-field decay of the averaged potential") {
  const ForceContext ctx(catalog("epicycloid"), Kernel{2.0, ForceSign::attractive});
  const Vec x = vec2(10.0, 10.0);
  const double G = ctx.G(x);
  const double scaled = G * std::pow((x - ctx.curves().curves[0].mean()).norm(), 1.0);
  CHECK(scaled > 0.8);
  CHECK(scaled < 1.2);
}

TEST_CASE("quadrature refinement agreement for the averaged force") {
  const ForceContext coarse(catalog("epicycloid"), Kernel{2.0, ForceSign::attractive}, 256);
  const ForceContext fine(catalog("epicycloid"), Kernel{2.0, ForceSign::attractive}, 2560);
  // Inside the winding-3 component but off the symmetry center, where F
  // vanishes exactly (the epicycloid satisfies H(t + 1/2) = -H(t)).
  const Vec x = vec2(0.7, 0.4);
  const Vec f1 = coarse.F(x), f2 = fine.F(x);
  CHECK(f1.norm() > 1e-6);  // generically nonzero there
  CHECK((f1 - f2).norm() < 1e-10 * f1.norm());
}

TEST_CASE("gradient of G matches finite differences") {
  const ForceContext ctx(catalog("epicycloid"), Kernel{2.0, ForceSign::attractive});
  UniformRng rng(17);
  int checked = 0;
  while (checked < 50) {
    const Vec x = admissible_point(ctx, rng, 0.25);
    const Vec g = ctx.grad_G(x);
    Vec fd(2);
    const double h = 1e-6 * (1.0 + x.norm());
    for (int j = 0; j < 2; ++j) {
      Vec e = Vec::Zero(2);
      e[j] = h;
      fd[j] = (ctx.G(x + e) - ctx.G(x - e)) / (2.0 * h);
    }
    CHECK((g - fd).norm() < 1e-6 * std::max(1.0, g.norm()));
    ++checked;
  }
}

TEST_CASE("G is subharmonic where q >= n-1") {
  UniformRng rng(23);
  const ForceContext planar(catalog("circle"), Kernel{2.0, ForceSign::attractive});
  const ForceContext spatial(catalog("trefoil"), Kernel{2.0, ForceSign::attractive});
  for (int i = 0; i < 25; ++i) {
    const Vec x2 = admissible_point(planar, rng, 0.2);
    CHECK(planar.hess_G(x2).trace() >= -1e-10);
    const Vec x3 = admissible_point(spatial, rng, 0.3);
    CHECK(spatial.hess_G(x3).trace() >= -1e-10);
  }
}

TEST_CASE("doubling quadrature nodes leaves G unchanged away from the curve") {
  const ForceContext c256 = circle_ctx(256);
  const ForceContext c512 = circle_ctx(512);
  UniformRng rng(29);
  for (int i = 0; i < 30; ++i) {
    const Vec x = admissible_point(c256, rng, 0.13);
    const double a = c256.G_fixed(x, 256), b = c512.G_fixed(x, 512);
    CHECK(std::abs(a - b) < 1e-12);
  }
}

TEST_CASE("averaged potential is below the kernel of the nearest distance") {
  // G(x) < g(d(x, K)) because the average includes farther points.
  const ForceContext ctx(catalog("epicycloid"), Kernel{2.0, ForceSign::attractive});
  UniformRng rng(31);
  for (int i = 0; i < 25; ++i) {
    const Vec x = admissible_point(ctx, rng, 0.2);
    const double d = ctx.distance_to_curves(x);
    Vec u(2);
    u << d, 0.0;
    CHECK(ctx.G(x) < g_eval(u, 2.0));
  }
}

TEST_CASE("proximity guard rejects points near the curve") {
  const ForceContext ctx(catalog("circle"), Kernel{2.0, ForceSign::attractive}, 256, 1e-3);
  CHECK_THROWS_AS(ctx.G(vec2(1.0, 1e-5)), ProximityError);
}

TEST_CASE("multi-curve contexts sum the potentials") {
  const ForceContext pair(catalog("unlink", {.c = 2, .separation = 4.0}),
                          Kernel{2.0, ForceSign::attractive});
  CurveSet single;
  single.curves.push_back(catalog("unlink", {.c = 2, .separation = 4.0}).curves[0]);
  const ForceContext one(single, Kernel{2.0, ForceSign::attractive});
  const Vec x = vec3(2.0, 0.3, 0.4);
  const double expected = one.G(x) + one.G(vec3(x[0] - 4.0, x[1], x[2]));
  CHECK(pair.G(x) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("F requires a single-curve context") {
  const ForceContext pair(catalog("unlink", {.c = 2, .separation = 4.0}),
                          Kernel{2.0, ForceSign::attractive});
  CHECK_THROWS_AS(pair.F(vec3(2.0, 0.0, 0.0)), ValidationError);
}

TEST_CASE("kernel exponent below 2 is rejected") {
  CHECK_THROWS_AS(ForceContext(catalog("circle"), Kernel{1.5, ForceSign::attractive}),
                  ValidationError);
}
