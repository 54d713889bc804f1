#include "keptop/degree.hpp"

#include <algorithm>
#include <cmath>

namespace keptop {

namespace {

double signed_angle(const Vec2& a, const Vec2& b) {
  return std::atan2(a.x() * b.y() - a.y() * b.x(), a.dot(b));
}

// Angle swept by the field between two boundary points, bisecting the chord
// until each step turns by less than pi/2.
double sweep(const VectorField& field, const Vec2& p0, const Vec2& p1, const Vec2& f0,
             const Vec2& f1, double norm_floor, double& min_norm, int depth,
             int& max_depth) {
  max_depth = std::max(max_depth, depth);
  const double turn = signed_angle(f0, f1);
  if (std::abs(turn) < 0.5 * M_PI) return turn;
  if (depth >= 12)
    throw DegreeRefinementError(
        "field turns too fast on the boundary; refinement level 12 exceeded");
  const Vec2 pm = 0.5 * (p0 + p1);
  Vec x(2);
  x << pm.x(), pm.y();
  const Vec fm_n = field(x);
  const Vec2 fm(fm_n[0], fm_n[1]);
  const double nm = fm.norm();
  min_norm = std::min(min_norm, nm);
  if (nm < norm_floor)
    throw ZeroOnBoundaryError("field vanishes on the boundary (degree undefined)");
  return sweep(field, p0, pm, f0, fm, norm_floor, min_norm, depth + 1, max_depth) +
         sweep(field, pm, p1, fm, f1, norm_floor, min_norm, depth + 1, max_depth);
}

}  // namespace

DegreeResult degree_2d(const VectorField& field, const std::vector<Loop2>& boundary,
                       double zero_tol_rel) {
  if (boundary.empty()) throw ValidationError("degree_2d needs at least one loop");

  // Field scale from the median norm over all vertices.
  std::vector<double> norms;
  std::vector<std::vector<Vec2>> values(boundary.size());
  for (size_t l = 0; l < boundary.size(); ++l) {
    for (const Vec2& p : boundary[l]) {
      Vec x(2);
      x << p.x(), p.y();
      const Vec f = field(x);
      values[l].emplace_back(f[0], f[1]);
      norms.push_back(values[l].back().norm());
    }
  }
  std::vector<double> sorted = norms;
  std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
  const double scale = sorted[sorted.size() / 2];
  const double floor_norm = zero_tol_rel * scale;

  double min_norm = std::numeric_limits<double>::infinity();
  for (double n : norms) min_norm = std::min(min_norm, n);
  if (min_norm < floor_norm)
    throw ZeroOnBoundaryError("field vanishes at a boundary vertex (degree undefined)");

  double total = 0.0;
  int max_depth = 0;
  for (size_t l = 0; l < boundary.size(); ++l) {
    const auto& loop = boundary[l];
    const size_t L = loop.size();
    if (L < 3) throw ValidationError("boundary loop needs at least 3 vertices");
    for (size_t k = 0; k < L; ++k) {
      const size_t k1 = (k + 1) % L;
      total += sweep(field, loop[k], loop[k1], values[l][k], values[l][k1], floor_norm,
                     min_norm, 0, max_depth);
    }
  }

  DegreeResult result;
  result.raw = total / kTwoPi;
  result.value = static_cast<int>(std::lround(result.raw));
  result.refinement_level = max_depth;
  result.min_field_norm = min_norm;
  if (std::abs(result.raw - result.value) >= 0.25)
    throw DegreeRefinementError("angle sum did not certify an integer degree");
  return result;
}

ClosedSurface sphere_surface(const Vec3& center, double radius) {
  ClosedSurface s;
  SurfacePatch patch;
  patch.v_periodic = true;
  patch.eval = [center, radius](double u, double v) {
    const double theta = M_PI * u, phi = kTwoPi * v;
    return Vec3(center.x() + radius * std::sin(theta) * std::cos(phi),
                center.y() + radius * std::sin(theta) * std::sin(phi),
                center.z() + radius * std::cos(theta));
  };
  s.patches.push_back(std::move(patch));
  return s;
}

ClosedSurface box_surface(const Vec3& lo, const Vec3& hi) {
  ClosedSurface s;
  const Vec3 d = hi - lo;
  // Each face parameterized so that d/du x d/dv points outward.
  auto face = [&](auto f) {
    SurfacePatch p;
    p.eval = f;
    s.patches.push_back(std::move(p));
  };
  face([=](double u, double v) {  // +x
    return Vec3(hi.x(), lo.y() + u * d.y(), lo.z() + v * d.z());
  });
  face([=](double u, double v) {  // -x
    return Vec3(lo.x(), lo.y() + v * d.y(), lo.z() + u * d.z());
  });
  face([=](double u, double v) {  // +y
    return Vec3(lo.x() + v * d.x(), hi.y(), lo.z() + u * d.z());
  });
  face([=](double u, double v) {  // -y
    return Vec3(lo.x() + u * d.x(), lo.y(), lo.z() + v * d.z());
  });
  face([=](double u, double v) {  // +z
    return Vec3(lo.x() + u * d.x(), lo.y() + v * d.y(), hi.z());
  });
  face([=](double u, double v) {  // -z
    return Vec3(lo.x() + v * d.x(), lo.y() + u * d.y(), lo.z());
  });
  return s;
}

namespace {

// Kronecker integral over one patch at the given resolution. Field values on
// a cell-centered grid; tangential derivatives by central differences of the
// composed map.
double patch_integral(const VectorField& field, const SurfacePatch& patch, int u_res,
                      int v_res, double& min_norm, std::vector<double>& norms) {
  const double du = 1.0 / u_res, dv = 1.0 / v_res;
  Eigen::MatrixXd fx(u_res + 2, v_res + 2), fy(u_res + 2, v_res + 2),
      fz(u_res + 2, v_res + 2);
  auto u_of = [&](int i) { return (i - 0.5) * du; };
  auto v_of = [&](int j) { return (j - 0.5) * dv; };
  for (int i = 0; i <= u_res + 1; ++i) {
    double u = u_of(i);
    if (!patch.u_periodic) u = std::clamp(u, 0.0, 1.0);
    for (int j = 0; j <= v_res + 1; ++j) {
      double v = v_of(j);
      if (patch.v_periodic) v -= std::floor(v);
      const Vec3 p = patch.eval(u, v);
      Vec x(3);
      x << p.x(), p.y(), p.z();
      const Vec f = field(x);
      fx(i, j) = f[0];
      fy(i, j) = f[1];
      fz(i, j) = f[2];
    }
  }
  double integral = 0.0;
  for (int i = 1; i <= u_res; ++i) {
    for (int j = 1; j <= v_res; ++j) {
      const Vec3 f(fx(i, j), fy(i, j), fz(i, j));
      const double n = f.norm();
      min_norm = std::min(min_norm, n);
      norms.push_back(n);
      // Ghost spacing at clamped patch edges is halved.
      double su = 2.0 * du, sv = 2.0 * dv;
      if (!patch.u_periodic && (i == 1 || i == u_res)) su = 1.5 * du;
      if (!patch.v_periodic && (j == 1 || j == v_res)) sv = 1.5 * dv;
      const Vec3 fu((fx(i + 1, j) - fx(i - 1, j)) / su, (fy(i + 1, j) - fy(i - 1, j)) / su,
                    (fz(i + 1, j) - fz(i - 1, j)) / su);
      const Vec3 fv((fx(i, j + 1) - fx(i, j - 1)) / sv, (fy(i, j + 1) - fy(i, j - 1)) / sv,
                    (fz(i, j + 1) - fz(i, j - 1)) / sv);
      integral += f.dot(fu.cross(fv)) / (n * n * n) * du * dv;
    }
  }
  return integral;
}

}  // namespace

DegreeResult degree_3d(const VectorField& field, const ClosedSurface& surface, int u_res,
                       int v_res, double zero_tol_rel) {
  DegreeResult result;
  for (int level = 0; level < 5; ++level) {
    double min_norm = std::numeric_limits<double>::infinity();
    std::vector<double> norms;
    double integral = 0.0;
    for (const auto& patch : surface.patches)
      integral += patch_integral(field, patch, u_res << level, v_res << level, min_norm,
                                 norms);
    std::nth_element(norms.begin(), norms.begin() + norms.size() / 2, norms.end());
    const double scale = norms[norms.size() / 2];
    if (min_norm < zero_tol_rel * scale)
      throw ZeroOnBoundaryError("field vanishes on the surface (degree undefined)");

    result.raw = integral / (2.0 * kTwoPi);
    result.value = static_cast<int>(std::lround(result.raw));
    result.refinement_level = level;
    result.min_field_norm = min_norm;
    if (std::abs(result.raw - result.value) < 0.1) return result;
  }
  throw DegreeRefinementError("Kronecker integral did not certify an integer degree");
}

DegreeResult degree_region_with_holes(const VectorField& field,
                                      const std::vector<Loop2>& outer,
                                      const std::vector<std::vector<Loop2>>& inners,
                                      double zero_tol_rel) {
  DegreeResult result = degree_2d(field, outer, zero_tol_rel);
  for (const auto& inner : inners) {
    const DegreeResult r = degree_2d(field, inner, zero_tol_rel);
    result.value -= r.value;
    result.raw -= r.raw;
    result.refinement_level = std::max(result.refinement_level, r.refinement_level);
    result.min_field_norm = std::min(result.min_field_norm, r.min_field_norm);
  }
  return result;
}

}  // namespace keptop
