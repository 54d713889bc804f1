#include "keptop/critical.hpp"

#include <algorithm>
#include <cmath>

#include "keptop/planar.hpp"

namespace keptop {

namespace {

// Damped Newton iteration on grad G. The Newton direction is tried first
// with backtracking on |grad G|; when it yields no decrease (indefinite
// Hessian far from a zero), a Levenberg-regularized least-squares step on
// |grad G|^2 takes over for that iteration. Returns the converged point or
// nothing.
std::optional<Vec> newton_descend(const ForceContext& ctx, Vec x, const Box& box,
                                  double tol) {
  const int max_iters = 100;
  const double leash = 2.0 * box.diameter();
  const int n = static_cast<int>(x.size());

  auto try_direction = [&](Vec& xr, double& gnorm, const Vec& step, int backtracks) {
    double alpha = 1.0;
    for (int bt = 0; bt < backtracks; ++bt) {
      const Vec trial = xr + alpha * step;
      if ((trial - xr).norm() < leash) {
        try {
          const double trial_norm = ctx.grad_G(trial).norm();
          if (trial_norm < gnorm) {
            xr = trial;
            gnorm = trial_norm;
            return true;
          }
        } catch (const ProximityError&) {
          // step landed on the curve; shrink
        }
      }
      alpha *= 0.5;
    }
    return false;
  };

  try {
    double gnorm = ctx.grad_G(x).norm();
    for (int it = 0; it < max_iters; ++it) {
      const double target = tol * (1.0 + std::abs(ctx.G(x)));
      if (gnorm < target) return x;
      const Vec g = ctx.grad_G(x);
      const Mat h = ctx.hess_G(x);

      const Vec newton_step = h.fullPivLu().solve(-g);
      bool accepted =
          newton_step.allFinite() && try_direction(x, gnorm, newton_step, 40);

      if (!accepted) {
        const Mat h2 = h.transpose() * h;
        double mu = 1e-6 * h2.trace() / n;
        for (int esc = 0; esc < 7 && !accepted; ++esc) {
          const Vec lm_step =
              (h2 + mu * Mat::Identity(n, n)).ldlt().solve(-h.transpose() * g);
          if (lm_step.allFinite()) accepted = try_direction(x, gnorm, lm_step, 8);
          mu *= 10.0;
        }
      }
      if (!accepted) return std::nullopt;
    }
    const double target = tol * (1.0 + std::abs(ctx.G(x)));
    if (gnorm < target) return x;
  } catch (const ProximityError&) {
    return std::nullopt;
  }
  return std::nullopt;
}

}  // namespace

Box default_search_box(const ForceContext& ctx) {
  const int n = ctx.dimension();
  Vec lo = Vec::Constant(n, std::numeric_limits<double>::infinity());
  Vec hi = -lo;
  for (const auto& curve : ctx.curves().curves) {
    const Mat poly = curve.sample(512);
    lo = lo.cwiseMin(poly.rowwise().minCoeff());
    hi = hi.cwiseMax(poly.rowwise().maxCoeff());
  }
  const double diameter = (hi - lo).norm();
  Box box{lo, hi};
  return box.expanded(std::max(diameter, 1.0));
}

SpectrumClassification classify_spectrum(const Mat& hess, double rel_tol) {
  Eigen::SelfAdjointEigenSolver<Mat> solver(0.5 * (hess + hess.transpose()));
  SpectrumClassification c;
  c.eigenvalues = solver.eigenvalues();
  const double max_abs = c.eigenvalues.cwiseAbs().maxCoeff();
  int negatives = 0;
  double min_abs = std::numeric_limits<double>::infinity();
  for (int i = 0; i < c.eigenvalues.size(); ++i) {
    if (c.eigenvalues[i] < 0) ++negatives;
    min_abs = std::min(min_abs, std::abs(c.eigenvalues[i]));
  }
  c.morse_index = negatives;
  c.local_degree = (negatives % 2 == 0) ? 1 : -1;
  c.degenerate = (max_abs == 0.0) || (min_abs <= rel_tol * max_abs);
  return c;
}

CriticalPoint classify(const ForceContext& ctx, Vec x, bool fd_check) {
  CriticalPoint cp;
  cp.x = std::move(x);
  cp.G_value = ctx.G(cp.x);
  cp.grad_norm = ctx.grad_G(cp.x).norm();
  cp.distance_to_K = ctx.distance_to_curves(cp.x);
  const Mat hess = ctx.hess_G(cp.x);
  const SpectrumClassification spec = classify_spectrum(hess);
  cp.eigenvalues = spec.eigenvalues;
  cp.morse_index = spec.morse_index;
  cp.local_degree = spec.local_degree;
  cp.degenerate = spec.degenerate;
  if (fd_check) {
    const int n = ctx.dimension();
    const double h = 1e-5 * (1.0 + cp.x.norm());
    Mat fd(n, n);
    for (int j = 0; j < n; ++j) {
      Vec e = Vec::Zero(n);
      e[j] = h;
      fd.col(j) = (ctx.grad_G(cp.x + e) - ctx.grad_G(cp.x - e)) / (2.0 * h);
    }
    cp.fd_ok = (hess - fd).norm() <= 1e-5 * std::max(1e-300, hess.norm());
  }
  return cp;
}

std::vector<CriticalPoint> find_critical_points(const ForceContext& ctx, const Box& box,
                                                const SearchOptions& opts,
                                                SearchStats* stats) {
  const int n = ctx.dimension();
  if (box.dimension() != n) throw ValidationError("search box dimension mismatch");

  std::vector<Vec> starts;

  // Zeros of grad G sit inside the curves' far-field ball (the radial
  // derivative is negative beyond it), so most of the Halton sweep goes to
  // the tight curve region; a thinner sweep covers the whole requested box.
  Box core = box;
  {
    Vec lo = Vec::Constant(n, std::numeric_limits<double>::infinity());
    Vec hi = -lo;
    for (const auto& curve : ctx.curves().curves) {
      const Mat poly = curve.sample(256);
      lo = lo.cwiseMin(poly.rowwise().minCoeff());
      hi = hi.cwiseMax(poly.rowwise().maxCoeff());
    }
    core = Box{lo, hi}.expanded(0.1 * (hi - lo).norm());
    core.lo = core.lo.cwiseMax(box.lo);
    core.hi = core.hi.cwiseMin(box.hi);
  }
  const std::uint64_t offset = (opts.seed % 1009) * static_cast<std::uint64_t>(opts.n_starts);
  const int n_core = (7 * opts.n_starts) / 10;
  for (int i = 0; i < n_core; ++i) starts.push_back(halton_point(offset + i + 1, core));
  for (int i = n_core; i < opts.n_starts; ++i)
    starts.push_back(halton_point(offset + i + 1, box));

  // 64 offsets along curve normals at distances {0.1, 0.3, 1.0} x radius;
  // critical points cluster near the curves' inside. Direction and distance
  // rotate with the curve parameter to spread the fixed budget.
  const double radius = ctx.curve_radius();
  const int n_structured = 64;
  const int per_curve = std::max(1, n_structured / ctx.curves().component_count());
  const double dists[3] = {0.1, 0.3, 1.0};
  for (const auto& curve : ctx.curves().curves) {
    for (int k = 0; k < per_curve; ++k) {
      const double t = static_cast<double>(k) / per_curve;
      const Vec p = curve.eval(t);
      Vec tangent = curve.eval(t, 1);
      if (tangent.norm() < 1e-12) continue;
      tangent.normalize();
      Vec normal;
      if (n == 2) {
        normal = Vec(2);
        normal << -tangent[1], tangent[0];
        if (k % 2 == 1) normal = -normal;
      } else {
        Vec ref = Vec::Zero(3);
        ref[std::abs(tangent[2]) < 0.9 ? 2 : 0] = 1.0;
        const Vec e1 = (ref - ref.dot(tangent) * tangent).normalized();
        Vec e2(3);
        e2 << tangent[1] * e1[2] - tangent[2] * e1[1],
            tangent[2] * e1[0] - tangent[0] * e1[2],
            tangent[0] * e1[1] - tangent[1] * e1[0];
        const double phi = 0.25 * kTwoPi * (k % 4) + 0.1;
        normal = std::cos(phi) * e1 + std::sin(phi) * e2;
      }
      starts.push_back(p + dists[k % 3] * radius * normal);
    }
  }

  // In the plane, one start inside each bounded complement component.
  if (n == 2 && ctx.curves().component_count() == 1) {
    const ComplementMap map = analyze_complement(ctx.curves().curves[0], 256);
    for (const auto& comp : map.components)
      if (comp.bounded) {
        Vec rep(2);
        rep << comp.representative.x(), comp.representative.y();
        starts.push_back(rep);
      }
  }

  SearchStats local;
  local.starts = static_cast<int>(starts.size());

  std::vector<Vec> found;
  const double dedup = 1e-6 * box.diameter();
  for (const Vec& start : starts) {
    if (!box.contains(start)) continue;
    const auto result = newton_descend(ctx, start, box, opts.tol);
    if (!result) {
      ++local.dropped_nonconverged;
      continue;
    }
    const Vec& x = *result;
    if (!box.contains(x)) {
      ++local.dropped_outside_box;
      continue;
    }
    if (ctx.distance_to_curves(x) < opts.exclusion_radius) {
      ++local.dropped_near_curve;
      continue;
    }
    ++local.converged;
    bool duplicate = false;
    for (const Vec& y : found)
      if ((x - y).norm() < dedup) duplicate = true;
    if (!duplicate) found.push_back(x);
  }

  std::sort(found.begin(), found.end(), [](const Vec& a, const Vec& b) {
    for (int i = 0; i < a.size(); ++i) {
      if (a[i] < b[i] - 1e-12) return true;
      if (a[i] > b[i] + 1e-12) return false;
    }
    return false;
  });

  std::vector<CriticalPoint> points;
  points.reserve(found.size());
  for (Vec& x : found) points.push_back(classify(ctx, std::move(x), opts.fd_check));
  if (stats) *stats = local;
  return points;
}

MorseCensus morse_census(const ForceContext& ctx, const std::vector<CriticalPoint>& points) {
  if (ctx.dimension() != 3) throw ValidationError("the Morse census applies in R^3");
  MorseCensus census;
  for (const auto& cp : points) {
    if (cp.degenerate)
      throw ValidationError("census refused: degenerate critical point present");
    // Index of -G is 3 - index of G.
    switch (3 - cp.morse_index) {
      case 1: ++census.m1; break;
      case 2: ++census.m2; break;
      case 3: ++census.m3; break;
      default: break;  // index-0 points of -G are maxima of G, excluded by subharmonicity
    }
    census.degree_sum += ((3 - cp.morse_index) % 2 == 0) ? 1 : -1;
  }
  census.identity_holds = (census.m2 - census.m1 == census.m3 + 1);

  const Vec c = ctx.curve_center();
  const double R = 10.0 * std::max(ctx.curve_radius(), 1e-6);
  const VectorField minus_grad = [&ctx](const Vec& x) { return Vec(-ctx.grad_G(x)); };
  const DegreeResult far = degree_3d(minus_grad, sphere_surface(Vec3(c[0], c[1], c[2]), R));
  census.far_field_degree = far.value;
  census.exhaustive = (census.degree_sum == census.far_field_degree);
  return census;
}

}  // namespace keptop
