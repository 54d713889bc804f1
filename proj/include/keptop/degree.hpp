#pragma once

#include <functional>

#include "keptop/common.hpp"

namespace keptop {

/// Brouwer degree of a vector field over a region, computed from boundary
/// data with an integer certificate.
struct DegreeResult {
  int value = 0;
  double raw = 0.0;               // pre-rounding angle sum / Kronecker integral
  int refinement_level = 0;
  double min_field_norm = 0.0;    // smallest |f| seen on the boundary
};

using VectorField = std::function<Vec(const Vec&)>;
using Loop2 = std::vector<Vec2>;

/// Thrown when the field (nearly) vanishes on the boundary, where the degree
/// is undefined.
struct ZeroOnBoundaryError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
/// Thrown when refinement fails to produce an integer certificate.
struct DegreeRefinementError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Total signed turning of the field along closed oriented polylines, with
/// adaptive bisection until every step turns by less than pi/2. The loops
/// jointly bound the region (outer loops counterclockwise, holes clockwise).
DegreeResult degree_2d(const VectorField& field, const std::vector<Loop2>& boundary,
                       double zero_tol_rel = 1e-8);

/// One smooth, outward-oriented parameter patch of a closed surface.
struct SurfacePatch {
  std::function<Vec3(double, double)> eval;  // (u, v) in [0,1]^2
  bool u_periodic = false;
  bool v_periodic = false;
};

/// Closed surface assembled from outward-oriented patches.
struct ClosedSurface {
  std::vector<SurfacePatch> patches;
};

ClosedSurface sphere_surface(const Vec3& center, double radius);
ClosedSurface box_surface(const Vec3& lo, const Vec3& hi);

/// Kronecker boundary integral (1/4pi) * sum over patches of
/// det(f, df/du, df/dv) / |f|^3 du dv, refined until the raw value is within
/// 0.1 of an integer.
DegreeResult degree_3d(const VectorField& field, const ClosedSurface& surface,
                       int u_res = 64, int v_res = 128, double zero_tol_rel = 1e-8);

/// Degree over a region with holes: degree over the outer boundary minus the
/// degrees over the (pairwise disjoint, enclosed) inner boundaries.
DegreeResult degree_region_with_holes(const VectorField& field,
                                      const std::vector<Loop2>& outer,
                                      const std::vector<std::vector<Loop2>>& inners,
                                      double zero_tol_rel = 1e-8);

}  // namespace keptop
