#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "keptop/knots3d.hpp"
#include "keptop/planar.hpp"

using namespace keptop;

TEST_CASE("unknot homology rank") {
  const LinkData link = homology_rank(catalog("unknot"));
  CHECK(link.double_points == 0);
  CHECK(link.components == 1);
  CHECK(link.homology_rank == 1);
  CHECK(link.cross_check_ok);
}

TEST_CASE("two-component unlink has rank 2") {
  const LinkData link = homology_rank(catalog("unlink", {.c = 2, .separation = 4.0}));
  CHECK(link.double_points == 0);
  CHECK(link.components == 2);
  CHECK(link.homology_rank == 2);
}

TEST_CASE("planar figure-eight embedded in space has rank 2") {
  CurveSet set;
  set.curves.push_back(catalog_curve("lemniscate").embedded_in_3d());
  const LinkData link = homology_rank(set);
  CHECK(link.double_points == 1);
  CHECK(link.components == 1);
  CHECK(link.homology_rank == 2);

  // Planar oracle: the in-plane projection bounds exactly r bounded faces.
  const ComplementMap map = analyze_complement(catalog_curve("lemniscate"), 512);
  CHECK(map.r() == link.homology_rank);
}

TEST_CASE("knot catalog entries are rank 1") {
  for (const char* name : {"trefoil", "figure8", "granny"}) {
    CAPTURE(name);
    const LinkData link = homology_rank(catalog(name));
    CHECK(link.double_points == 0);
    CHECK(link.homology_rank == 1);
  }
}

TEST_CASE("hopf link has rank 2") {
  const LinkData link = homology_rank(catalog("hopf"));
  CHECK(link.double_points == 0);
  CHECK(link.components == 2);
  CHECK(link.homology_rank == 2);
}

TEST_CASE("tunnel catalog") {
  CHECK(tunnel_catalog("unknot") == 0);
  CHECK(tunnel_catalog("trefoil") == 1);
  CHECK(tunnel_catalog("figure8") == 1);
  CHECK(tunnel_catalog("torus") == 1);
  CHECK(tunnel_catalog("granny") == 2);
  CHECK(tunnel_catalog("hopf") == 1);
  CHECK(tunnel_catalog("unlink", 2) == 1);
  CHECK(tunnel_catalog("unlink", 3) == 2);
  CHECK_FALSE(tunnel_catalog("mystery").has_value());
}

TEST_CASE("catalog tunnel numbers are internally consistent") {
  // Composite entries have t >= 2; nontrivial knots have t >= 1.
  CHECK(*tunnel_catalog("granny") >= 2);
  for (const char* name : {"trefoil", "figure8", "torus", "hopf"})
    CHECK(*tunnel_catalog(name) >= 1);
}

TEST_CASE("bounds in space") {
  LinkData unknot = homology_rank(catalog("unknot"));
  unknot.tunnel_number = tunnel_catalog("unknot");
  const Bounds3d b1 = bounds_3d(unknot);
  CHECK(b1.degree_bound == 1);
  CHECK(b1.morse_bound == 1);

  LinkData trefoil = homology_rank(catalog("trefoil"));
  trefoil.tunnel_number = tunnel_catalog("trefoil");
  const Bounds3d b2 = bounds_3d(trefoil);
  CHECK(b2.degree_bound == 1);
  CHECK(b2.morse_bound == 3);

  LinkData unlink = homology_rank(catalog("unlink", {.c = 2, .separation = 4.0}));
  unlink.tunnel_number = tunnel_catalog("unlink", 2);
  const Bounds3d b3 = bounds_3d(unlink);
  CHECK(b3.degree_bound == 1);  // r - c + 1
  CHECK(b3.morse_bound == 3);

  LinkData unknown = unknot;
  unknown.tunnel_number.reset();
  CHECK_FALSE(bounds_3d(unknown).morse_bound.has_value());
}

TEST_CASE("granny bound needs five critical points") {
  LinkData granny = homology_rank(catalog("granny"));
  granny.tunnel_number = tunnel_catalog("granny");
  CHECK(bounds_3d(granny).morse_bound == 5);
}

TEST_CASE("three-component unlink bound matches the many-body count") {
  // With n = 4 bodies, c = 3 strands: bound 2 t + 1 = 5 = 2 n - 3.
  LinkData link = homology_rank(catalog("unlink", {.c = 3, .separation = 4.0}));
  link.tunnel_number = tunnel_catalog("unlink", 3);
  CHECK(bounds_3d(link).morse_bound == 5);
}
