#pragma once

#include "keptop/common.hpp"
#include "keptop/curve.hpp"

namespace keptop {

/// Winding number of the closed curve H around x, from the signed angle sum
/// of a sampled polyline. Samples are doubled until the polyline is fine
/// relative to the distance from x, so the polyline and the smooth curve are
/// homotopic in the complement of x.
int winding_number(const PeriodicCurve& H, const Vec2& x, int samples = 1024);

struct ComponentInfo {
  int id = 0;
  bool bounded = false;
  int winding = 0;
  Vec2 representative = Vec2::Zero();
  double representative_distance = 0.0;  // distance from the representative to the curve
  long cell_count = 0;
  bool winding_consistent = true;  // winding re-sampled at 5 cells agreed
};

/// Rasterized decomposition of R^2 minus the curve image into labeled
/// connected components with winding numbers.
struct ComplementMap {
  Vec2 box_lo = Vec2::Zero(), box_hi = Vec2::Zero();
  int resolution = 0;
  std::vector<std::int32_t> labels;  // row-major, -1 marks curve cells
  std::vector<ComponentInfo> components;
  long curve_cells = 0;
  int discarded_components = 0;
  long discarded_cells = 0;
  Mat polyline;  // 2 x samples, the rasterized polyline

  double cell_size() const { return (box_hi[0] - box_lo[0]) / resolution; }
  Vec2 cell_center(int i, int j) const {
    return Vec2(box_lo[0] + (i + 0.5) * cell_size(), box_lo[1] + (j + 0.5) * cell_size());
  }
  std::int32_t label_at(int i, int j) const {
    return labels[static_cast<size_t>(j) * resolution + i];
  }

  /// Number of bounded components.
  int r() const;
  /// Number of distinct winding values among bounded components.
  int s() const;
  std::vector<int> winding_multiset() const;  // bounded components, descending
  const ComponentInfo* component(int id) const;
};

ComplementMap analyze_complement(const PeriodicCurve& H, int resolution = 1024);

struct MultiplicityBounds {
  int r = 0, s = 0;
  int attractive_bound = 0;
  int repulsive_bound = 0;
  /// False when r = 0: the bounds above are vacuous and existence may still
  /// hold (the topological condition is sufficient, not necessary).
  bool condition_met = false;
};

MultiplicityBounds multiplicity_bounds(const ComplementMap& map);

/// A component shrunk away from the curve, with its boundary extracted as
/// closed polylines oriented with the region on the left (outer loops turn
/// counterclockwise).
struct Region {
  int component_id = 0;
  double delta = 0.0;
  long cell_count = 0;
  std::vector<std::vector<Vec2>> boundary;
};

Region erode_component(const ComplementMap& map, int id, double delta_erode);

}  // namespace keptop
