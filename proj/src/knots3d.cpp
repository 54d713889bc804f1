#include "keptop/knots3d.hpp"

#include <functional>
#include <numeric>

namespace keptop {

LinkData homology_rank(const CurveSet& set, int samples, double tol) {
  const IntersectionReport report = self_intersections(set, samples, tol);
  if (!report.tangential.empty())
    throw ValidationError(
        "homology rank refused: " + std::to_string(report.tangential.size()) +
        " tangential contact(s); the double-point count needs generic position");

  LinkData link;
  link.double_points = static_cast<int>(report.transverse.size());
  link.components = set.component_count();
  link.homology_rank = link.double_points + link.components;

  // Cross-check: r = d + c presumes crossings never merge distinct
  // components. Union the components through the mutual double points and
  // compare.
  std::vector<int> parent(set.curves.size());
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int a) {
    return parent[a] == a ? a : parent[a] = find(parent[a]);
  };
  for (const auto& dp : report.transverse)
    if (dp.curve_a != dp.curve_b) parent[find(dp.curve_a)] = find(dp.curve_b);
  int merged = 0;
  for (size_t i = 0; i < parent.size(); ++i)
    if (find(static_cast<int>(i)) == static_cast<int>(i)) ++merged;
  link.cross_check_ok = (merged == link.components);
  return link;
}

std::optional<int> tunnel_catalog(const std::string& name, int unlink_components) {
  if (name == "unknot" || name == "circle") return 0;  // only the trivial knot has t = 0
  if (name == "trefoil" || name == "figure8" || name == "torus") return 1;
  if (name == "granny") return 2;  // composite: two prime summands
  if (name == "hopf") return 1;
  if (name == "unlink") return unlink_components - 1;
  return std::nullopt;
}

Bounds3d bounds_3d(const LinkData& link) {
  Bounds3d b;
  b.degree_bound = link.homology_rank - link.components + 1;
  if (link.tunnel_number) b.morse_bound = 2 * (*link.tunnel_number) + 1;
  return b;
}

}  // namespace keptop
