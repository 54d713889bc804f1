#pragma once

#include <string>
#include <vector>

#include "keptop/common.hpp"
#include "keptop/planar.hpp"

namespace keptop {

/// Planar component map: regions filled by winding-indexed colors with a
/// legend, the curve overlaid, optional orbit traces and critical-point
/// markers. Deterministic text output.
std::string svg_map(const ComplementMap& map,
                    const std::vector<std::pair<int, Mat>>& orbit_traces = {},
                    const std::vector<Vec2>& critical_points = {});

/// Three orthographic projections (xy, xz, yz) of spatial curves with
/// critical points marked and optional orbit traces.
std::string svg_projections(const std::vector<Mat>& curve_polylines,
                            const std::vector<Vec>& critical_points = {},
                            const std::vector<Mat>& orbit_traces = {});

}  // namespace keptop
