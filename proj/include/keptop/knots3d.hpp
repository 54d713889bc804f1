#pragma once

#include <optional>
#include <string>

#include "keptop/common.hpp"
#include "keptop/curve.hpp"

namespace keptop {

/// Topological data of a generic curve collection K in R^3: d transverse
/// double points, c components, and the first homology rank of the
/// complement, r = d + c.
struct LinkData {
  int double_points = 0;
  int components = 0;
  int homology_rank = 0;  // d + c
  std::string catalog_name;
  std::optional<int> tunnel_number;
  /// False when double points merge distinct components, where r = d + c no
  /// longer matches the graph-rank cross-check; such inputs are flagged,
  /// not resolved.
  bool cross_check_ok = true;
};

/// Count double points of the set and form r = d + c. Refuses non-generic
/// (tangential) contacts.
LinkData homology_rank(const CurveSet& set, int samples = 1024, double tol = -1.0);

/// Tunnel numbers of the shipped catalog entries; computing tunnel numbers is
/// out of reach, so they are table constants.
std::optional<int> tunnel_catalog(const std::string& name, int unlink_components = 2);

struct Bounds3d {
  int degree_bound = 0;                  // r - c + 1
  std::optional<int> morse_bound;        // 2 t + 1 when the tunnel number is known
};

Bounds3d bounds_3d(const LinkData& link);

}  // namespace keptop
