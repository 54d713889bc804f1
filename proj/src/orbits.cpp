#include "keptop/orbits.hpp"

#include <algorithm>
#include <cmath>

namespace keptop {

double lambda_from_epsilon(double epsilon, double q) {
  if (epsilon < 0) throw ValidationError("epsilon must be nonnegative");
  if (epsilon == 0.0) return std::numeric_limits<double>::infinity();
  return std::pow(epsilon, -1.0 / (q + 1.0));
}

double epsilon_from_lambda(double lambda, double q) {
  if (lambda <= 0) throw ValidationError("lambda must be positive");
  return std::pow(lambda, -(q + 1.0));
}

void validate_lambda_request(const Kernel& kernel, double lambda) {
  if (lambda > 0) return;
  if (kernel.sign == ForceSign::repulsive)
    throw ValidationError(
        "refused: the repulsive problem has no periodic solutions at lambda = 0 "
        "(multiplying the equation by u forces a sign contradiction)");
  throw ValidationError("refused: the forcing level lambda must be positive");
}

namespace {

// Force field of the rescaled equation: f(z, t) = -sigma sum_i
// (z - k_i(t)) / |z - k_i(t)|^{q+1}, so that z'' = eps f.
struct CollocationField {
  const ForceContext& ctx;

  Vec value(const Vec& z, const std::vector<Mat>& samples, int node) const {
    const double q = ctx.kernel().q;
    Vec f = Vec::Zero(z.size());
    for (const auto& s : samples) {
      const Vec u = z - s.col(node);
      const double r = u.norm();
      if (r <= 0) throw SingularityError("orbit touched a curve");
      f -= std::pow(r, -(q + 1.0)) * u;
    }
    return ctx.kernel().sign_factor() * f;
  }

  Mat jacobian(const Vec& z, const std::vector<Mat>& samples, int node) const {
    const double q = ctx.kernel().q;
    const int n = static_cast<int>(z.size());
    Mat A = Mat::Zero(n, n);
    for (const auto& s : samples) {
      const Vec u = z - s.col(node);
      const double r = u.norm();
      const double rm = std::pow(r, -(q + 1.0));
      A -= rm * Mat::Identity(n, n) - (q + 1.0) * rm / (r * r) * (u * u.transpose());
    }
    return ctx.kernel().sign_factor() * A;
  }

  // Same field at arbitrary time (for residual certification and monodromy).
  Vec value_at(const Vec& z, double t) const {
    const double q = ctx.kernel().q;
    Vec f = Vec::Zero(z.size());
    for (const auto& curve : ctx.curves().curves) {
      const Vec u = z - curve.eval(t);
      const double r = u.norm();
      if (r <= 0) throw SingularityError("orbit touched a curve");
      f -= std::pow(r, -(q + 1.0)) * u;
    }
    return ctx.kernel().sign_factor() * f;
  }

  Mat jacobian_at(const Vec& z, double t) const {
    const double q = ctx.kernel().q;
    const int n = static_cast<int>(z.size());
    Mat A = Mat::Zero(n, n);
    for (const auto& curve : ctx.curves().curves) {
      const Vec u = z - curve.eval(t);
      const double r = u.norm();
      const double rm = std::pow(r, -(q + 1.0));
      A -= rm * Mat::Identity(n, n) - (q + 1.0) * rm / (r * r) * (u * u.transpose());
    }
    return ctx.kernel().sign_factor() * A;
  }
};

// Periodic spectral second-derivative matrix on M = 2N+1 uniform nodes.
Mat spectral_d2(int M) {
  const int N = (M - 1) / 2;
  Mat D2(M, M);
  for (int j = 0; j < M; ++j) {
    for (int l = 0; l < M; ++l) {
      double sum = 0.0;
      for (int k = 1; k <= N; ++k) {
        const double w = kTwoPi * k;
        sum += -2.0 * w * w * std::cos(kTwoPi * k * (j - l) / M);
      }
      D2(j, l) = sum / M;
    }
  }
  return D2;
}

double collision_floor(const ForceContext& ctx, const BvpOptions& opts) {
  return opts.d_min > 0 ? opts.d_min : 1e-2 * std::max(ctx.curve_radius(), 1e-12);
}

// Min over nodes of the synchronous distance min_i |z_j - k_i(t_j)|; the
// singularity of the equation sits at z(t) = k_i(t), not at the static curve.
double min_sync_distance(const Mat& Z, const std::vector<Mat>& samples, int* node_out) {
  double best = std::numeric_limits<double>::infinity();
  int best_node = -1;
  for (int j = 0; j < Z.cols(); ++j) {
    for (const auto& s : samples) {
      const double d = (Z.col(j) - s.col(j)).norm();
      if (d < best) {
        best = d;
        best_node = j;
      }
    }
  }
  if (node_out) *node_out = best_node;
  return best;
}

}  // namespace

PeriodicOrbit solve_bvp(const ForceContext& ctx, double epsilon, const Mat& guess_nodes,
                        const BvpOptions& opts) {
  if (epsilon < 0) throw ValidationError("epsilon must be nonnegative");
  const int n = ctx.dimension();
  const int M = 2 * opts.modes + 1;
  if (guess_nodes.rows() != n || guess_nodes.cols() != M)
    throw ValidationError("initial guess must be n x (2*modes+1) node values");

  const CollocationField field{ctx};
  const Mat D2 = spectral_d2(M);
  const double d_min = collision_floor(ctx, opts);
  std::vector<Mat> samples;
  for (int c = 0; c < ctx.curves().component_count(); ++c)
    samples.push_back(ctx.curve_samples(c, M));

  Mat Z = guess_nodes;
  {
    int node;
    if (min_sync_distance(Z, samples, &node) < d_min)
      throw NearCollisionError("initial guess is inside the collision floor at node " +
                                   std::to_string(node),
                               node);
  }

  // Residual with the mean equation substituted for the neutral direction:
  //   T_j = (D2 Z)_j - eps (f_j - fbar) + fbar,
  // which vanishes exactly when z'' = eps f and the averaged field is zero.
  // This keeps the Jacobian invertible down to eps = 0. D2 is applied to the
  // mean-subtracted values: near-constant orbits would otherwise lose eight
  // digits to cancellation against the O((2 pi N)^2) diagonal.
  const auto assemble = [&](const Mat& Znow, Mat& T, std::vector<Mat>& A, double& fmax) {
    Mat F(n, M);
    fmax = 0.0;
    for (int j = 0; j < M; ++j) {
      F.col(j) = field.value(Znow.col(j), samples, j);
      A[j] = field.jacobian(Znow.col(j), samples, j);
      fmax = std::max(fmax, F.col(j).norm());
    }
    const Vec fbar = F.rowwise().mean();
    Mat Zosc = Znow;
    Zosc.colwise() -= Vec(Znow.rowwise().mean());
    T = Zosc * D2.transpose() - epsilon * F;
    T.colwise() += (epsilon + 1.0) * fbar;
  };

  Mat T(n, M);
  std::vector<Mat> A(M);
  double fmax = 0.0;
  assemble(Z, T, A, fmax);

  const int dof = n * M;
  Mat J(dof, dof);
  int iterations = 0;
  bool converged = false;
  for (; iterations < opts.max_iterations; ++iterations) {
    const double tol_now = opts.tol * std::max(1.0, epsilon * fmax) * (kTwoPi * opts.modes);
    if (T.cwiseAbs().maxCoeff() < tol_now) {
      converged = true;
      break;
    }

    // J[(j,a),(l,b)] = D2(j,l) Id - eps delta_jl A_j + (eps+1)/M A_l
    for (int l = 0; l < M; ++l) {
      for (int j = 0; j < M; ++j) {
        Mat block = ((epsilon + 1.0) / M) * A[l];
        if (j == l) block -= epsilon * A[j];
        block.diagonal().array() += D2(j, l);
        J.block(j * n, l * n, n, n) = block;
      }
    }
    const Eigen::Map<const Vec> t_flat(T.data(), dof);
    const Vec step = J.partialPivLu().solve(-t_flat);
    if (!step.allFinite()) throw SolveError("collocation Newton produced a non-finite step");
    Mat Znew = Z + Eigen::Map<const Mat>(step.data(), n, M);

    int node;
    if (min_sync_distance(Znew, samples, &node) < d_min)
      throw NearCollisionError(
          "orbit approached a curve inside the collision floor at node " +
              std::to_string(node),
          node);
    Z = std::move(Znew);
    assemble(Z, T, A, fmax);
  }
  if (!converged) {
    const double tol_now = opts.tol * std::max(1.0, epsilon * fmax) * (kTwoPi * opts.modes);
    if (T.cwiseAbs().maxCoeff() >= tol_now)
      throw SolveError("collocation Newton did not converge in " +
                       std::to_string(opts.max_iterations) + " iterations");
  }

  PeriodicOrbit orbit;
  orbit.epsilon = epsilon;
  orbit.lambda = lambda_from_epsilon(epsilon, ctx.kernel().q);
  orbit.modes = opts.modes;
  orbit.newton_iterations = iterations;
  orbit.z = PeriodicCurve::from_samples(Z, opts.modes, 0.0);

  // Certify the residual of the plain equation on a 4x finer node set.
  const int Mf = 4 * M;
  double res = 0.0;
  double gscale = 0.0;
  double dmin = std::numeric_limits<double>::infinity();
  const double q = ctx.kernel().q;
  for (int j = 0; j < Mf; ++j) {
    const double t = static_cast<double>(j) / Mf;
    const Vec z = orbit.z.eval(t);
    const Vec zpp = orbit.z.eval(t, 2);
    res = std::max(res, (zpp - epsilon * field.value_at(z, t)).cwiseAbs().maxCoeff());
    double gsum = 0.0;
    for (const auto& curve : ctx.curves().curves) {
      const double d = (z - curve.eval(t)).norm();
      dmin = std::min(dmin, d);
      gsum += (q - 1.0) * std::pow(d, -q);
    }
    gscale = std::max(gscale, gsum);
  }
  orbit.residual_sup = res;
  orbit.grad_scale = gscale;
  orbit.min_distance_to_K = dmin;

  // Planar single-curve problems carry the winding class of u = z - H.
  if (n == 2 && ctx.curves().component_count() == 1) {
    const PeriodicCurve& H = ctx.curves().curves[0];
    double total = 0.0;
    Vec2 prev = Vec2::Zero();
    const int Mw = 1024;
    for (int j = 0; j <= Mw; ++j) {
      const double t = static_cast<double>(j % Mw) / Mw;
      const Vec d = orbit.z.eval(t) - H.eval(t);
      const Vec2 cur(d[0], d[1]);
      if (j > 0)
        total += std::atan2(prev.x() * cur.y() - prev.y() * cur.x(), prev.dot(cur));
      prev = cur;
    }
    orbit.winding = static_cast<int>(std::lround(total / kTwoPi));
  }
  return orbit;
}

PeriodicOrbit solve_bvp(const ForceContext& ctx, double epsilon, const PeriodicCurve& guess,
                        const BvpOptions& opts) {
  return solve_bvp(ctx, epsilon, guess.sample(2 * opts.modes + 1), opts);
}

PeriodicOrbit solve_bvp_constant(const ForceContext& ctx, double epsilon, const Vec& point,
                                 const BvpOptions& opts) {
  Mat guess(point.size(), 2 * opts.modes + 1);
  guess.colwise() = point;
  return solve_bvp(ctx, epsilon, guess, opts);
}

double residual_tolerance(const PeriodicOrbit& orbit) {
  return 1e-8 * std::max(1.0, orbit.epsilon * orbit.grad_scale);
}

int adequate_modes(const ForceContext& ctx, const Vec& x, int base_modes, int max_modes) {
  int m = base_modes;
  while (m < max_modes) {
    const Vec coarse = ctx.grad_G_fixed(x, 2 * m + 1);
    const Vec fine = ctx.grad_G_fixed(x, 4 * m + 3);
    if ((coarse - fine).norm() <= 1e-9 * std::max(1.0, fine.norm())) break;
    m *= 2;
  }
  return std::min(m, max_modes);
}

PeriodicOrbit refine_until_certified(const ForceContext& ctx, PeriodicOrbit orbit,
                                     const BvpOptions& opts) {
  while (!residual_certified(orbit) && 2 * orbit.modes <= opts.max_modes) {
    BvpOptions finer = opts;
    finer.modes = 2 * orbit.modes;
    orbit = solve_bvp(ctx, orbit.epsilon, orbit.z.sample(2 * finer.modes + 1), finer);
  }
  return orbit;
}

ContinuationResult continue_in_epsilon(const ForceContext& ctx, const CriticalPoint& start,
                                       double epsilon_target, int max_steps,
                                       const BvpOptions& opts) {
  if (start.degenerate)
    throw ValidationError("continuation refused: the starting critical point is degenerate");
  if (epsilon_target <= 0) throw ValidationError("epsilon target must be positive");

  // Collocation nodes double as the quadrature rule for the averaged field,
  // so the mode count must resolve it at the branch foot.
  BvpOptions eff = opts;
  eff.modes = adequate_modes(ctx, start.x, opts.modes, opts.max_modes);

  ContinuationResult result;
  // Constants solve the epsilon = 0 problem exactly; no Newton needed.
  const int M = 2 * eff.modes + 1;
  Mat Znodes(start.x.size(), M);
  Znodes.colwise() = start.x;
  result.orbit = PeriodicOrbit{};
  result.orbit.epsilon = 0.0;
  result.orbit.lambda = std::numeric_limits<double>::infinity();
  result.orbit.modes = eff.modes;
  result.orbit.z = PeriodicCurve::from_samples(Znodes, 0, 0.0);
  result.orbit.min_distance_to_K = ctx.distance_to_curves(start.x);
  result.epsilon_reached = 0.0;

  double eps = 0.0;
  double step = 1e-4 * epsilon_target;

  while (result.steps < max_steps) {
    if (step < 1e-12 * epsilon_target) {
      result.obstruction =
          "continuation stuck: step underflow at epsilon = " + std::to_string(eps);
      return result;
    }
    const double eps_next = std::min(eps + step, epsilon_target);
    ++result.steps;
    try {
      PeriodicOrbit orbit = solve_bvp(ctx, eps_next, Znodes, eff);
      eps = eps_next;
      result.orbit = std::move(orbit);
      result.epsilon_reached = eps;
      Znodes = result.orbit.z.sample(M);
      if (eps >= epsilon_target) {
        result.reached_target = true;
        result.orbit = refine_until_certified(ctx, std::move(result.orbit), eff);
        return result;
      }
      if (result.orbit.newton_iterations <= 4) step *= 1.5;
    } catch (const NearCollisionError& e) {
      result.obstruction = e.what();  // collisions do not heal under step shrinking
      return result;
    } catch (const SolveError&) {
      step *= 0.5;
    }
  }
  result.obstruction = "continuation exceeded the step budget";
  return result;
}

PhysicalOrbit to_physical(const ForceContext& ctx, const PeriodicOrbit& orbit) {
  if (ctx.curves().component_count() != 1)
    throw ValidationError("the physical map u = lambda (z - H) needs a single-curve context");
  if (!(orbit.epsilon > 0)) throw ValidationError("physical orbits need epsilon > 0");

  const PeriodicCurve& H = ctx.curves().curves[0];
  const double q = ctx.kernel().q;
  const double lambda = lambda_from_epsilon(orbit.epsilon, q);
  const double sigma = ctx.kernel().sign_factor();

  PhysicalOrbit phys;
  phys.lambda = lambda;
  phys.u = orbit.z.plus(H.scaled(-1.0)).scaled(lambda);

  const PeriodicCurve h = H.derivative(2).scaled(-1.0);
  const int Mf = 4 * (2 * orbit.modes + 1);
  double res = 0.0;
  double umin = std::numeric_limits<double>::infinity(), umax = 0.0;
  for (int j = 0; j < Mf; ++j) {
    const double t = static_cast<double>(j) / Mf;
    const Vec u = phys.u.eval(t);
    const Vec upp = phys.u.eval(t, 2);
    const double r = u.norm();
    umin = std::min(umin, r);
    umax = std::max(umax, r);
    const Vec lhs = upp + sigma * u / std::pow(r, q + 1.0) - lambda * h.eval(t);
    res = std::max(res, lhs.cwiseAbs().maxCoeff());
  }
  phys.residual_sup = res;
  phys.min_norm = umin;
  phys.max_norm = umax;
  return phys;
}

double energy_check(const PeriodicCurve& u, const PeriodicCurve& h, double lambda, double q,
                    ForceSign sign, int nodes) {
  const double s = (sign == ForceSign::repulsive) ? 1.0 : -1.0;
  Mat E(1, nodes);
  for (int j = 0; j < nodes; ++j) {
    const double t = static_cast<double>(j) / nodes;
    const Vec up = u.eval(t, 1);
    const double r = u.eval(t).norm();
    E(0, j) = 0.5 * up.squaredNorm() + s / ((q - 1.0) * std::pow(r, q - 1.0));
  }
  // dE/dt by spectral differentiation of the sampled energy. The mean is
  // removed first: it does not contribute to the derivative, and its DFT
  // leakage would otherwise drown the trim threshold for roundoff modes.
  E.array() -= E.mean();
  const PeriodicCurve Ec = PeriodicCurve::from_samples(E, (nodes - 1) / 2, 1e-13);
  double worst = 0.0;
  for (int j = 0; j < nodes; ++j) {
    const double t = static_cast<double>(j) / nodes;
    const double dE = Ec.eval(t, 1)[0];
    const double rhs = lambda * u.eval(t, 1).dot(h.eval(t));
    worst = std::max(worst, std::abs(dE - rhs));
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Monodromy
// ---------------------------------------------------------------------------

namespace {

// Embedded Dormand-Prince 5(4) step for the matrix ODE Y' = RHS(t, Y).
template <typename Rhs>
void rk45_step(const Rhs& rhs, double t, const Mat& Y, double h, Mat& Y_out, double& err) {
  const Mat k1 = rhs(t, Y);
  const Mat k2 = rhs(t + h / 5, Y + h * (0.2 * k1));
  const Mat k3 = rhs(t + 3 * h / 10, Y + h * (3.0 / 40 * k1 + 9.0 / 40 * k2));
  const Mat k4 =
      rhs(t + 4 * h / 5, Y + h * (44.0 / 45 * k1 - 56.0 / 15 * k2 + 32.0 / 9 * k3));
  const Mat k5 = rhs(t + 8 * h / 9, Y + h * (19372.0 / 6561 * k1 - 25360.0 / 2187 * k2 +
                                             64448.0 / 6561 * k3 - 212.0 / 729 * k4));
  const Mat k6 =
      rhs(t + h, Y + h * (9017.0 / 3168 * k1 - 355.0 / 33 * k2 + 46732.0 / 5247 * k3 +
                          49.0 / 176 * k4 - 5103.0 / 18656 * k5));
  Y_out = Y + h * (35.0 / 384 * k1 + 500.0 / 1113 * k3 + 125.0 / 192 * k4 -
                   2187.0 / 6784 * k5 + 11.0 / 84 * k6);
  const Mat k7 = rhs(t + h, Y_out);
  const Mat diff = h * ((35.0 / 384 - 5179.0 / 57600) * k1 +
                        (500.0 / 1113 - 7571.0 / 16695) * k3 +
                        (125.0 / 192 - 393.0 / 640) * k4 +
                        (-2187.0 / 6784 + 92097.0 / 339200) * k5 +
                        (11.0 / 84 - 187.0 / 2100) * k6 - 1.0 / 40 * k7);
  err = diff.cwiseAbs().maxCoeff();
}

}  // namespace

MonodromyResult nondegeneracy(const ForceContext& ctx, const PeriodicOrbit& orbit,
                              double local_tol) {
  const int n = ctx.dimension();
  const CollocationField field{ctx};
  const double eps = orbit.epsilon;
  const PeriodicCurve& z = orbit.z;

  const auto rhs = [&](double t, const Mat& Y) -> Mat {
    // Y stacks (v; v') blocks; v'' = eps A(t) v.
    const Mat A = field.jacobian_at(z.eval(t), t);
    Mat out(2 * n, Y.cols());
    out.topRows(n) = Y.bottomRows(n);
    out.bottomRows(n) = eps * (A * Y.topRows(n));
    return out;
  };

  Mat Y = Mat::Identity(2 * n, 2 * n);
  double t = 0.0, h = 1e-3;
  int guard = 0;
  while (t < 1.0) {
    if (++guard > 2000000) throw SolveError("monodromy integrator stalled");
    h = std::min(h, 1.0 - t);
    Mat Y_next;
    double err = 0.0;
    rk45_step(rhs, t, Y, h, Y_next, err);
    const double tol = local_tol * std::max(1.0, Y.cwiseAbs().maxCoeff());
    if (err <= tol) {
      t += h;
      Y = std::move(Y_next);
    }
    const double scale = err > 0 ? 0.9 * std::pow(tol / err, 0.2) : 2.0;
    h *= std::clamp(scale, 0.2, 2.5);
    if (h < 1e-14) throw SolveError("monodromy step underflow near a curve");
  }

  MonodromyResult result;
  result.monodromy = Y;
  result.eigenvalues = Eigen::EigenSolver<Mat>(Y).eigenvalues();
  result.gap = std::abs((Y - Mat::Identity(2 * n, 2 * n)).determinant());
  result.nondegenerate = result.gap > 1e-8 * Y.norm();
  return result;
}

int distinct_count(const std::vector<PeriodicOrbit>& orbits, double tol) {
  const int samples = 256;
  std::vector<Mat> traces;
  traces.reserve(orbits.size());
  for (const auto& o : orbits) traces.push_back(o.z.sample(samples));

  std::vector<int> cluster(orbits.size(), -1);
  int clusters = 0;
  for (size_t i = 0; i < orbits.size(); ++i) {
    if (cluster[i] >= 0) continue;
    cluster[i] = clusters++;
    for (size_t j = i + 1; j < orbits.size(); ++j) {
      if (cluster[j] >= 0) continue;
      double sup = 0.0;
      for (int k = 0; k < samples; ++k)
        sup = std::max(sup, (traces[i].col(k) - traces[j].col(k)).norm());
      if (sup < tol) cluster[j] = cluster[i];
    }
  }
  return clusters;
}

std::vector<PeriodicOrbit> multistart_search(const ForceContext& ctx, double epsilon,
                                             const std::vector<CriticalPoint>& critical_points,
                                             const MultistartOptions& opts,
                                             MultistartStats* stats) {
  MultistartStats local;
  std::vector<PeriodicOrbit> found;

  auto offer = [&](PeriodicOrbit&& orbit) {
    // A converged iteration whose certified residual stays above tolerance is
    // an under-resolved artifact, not a solution.
    orbit = refine_until_certified(ctx, std::move(orbit), opts.bvp);
    if (!residual_certified(orbit)) {
      ++local.failed;
      return;
    }
    ++local.converged;
    for (const auto& o : found) {
      double sup = 0.0;
      const Mat a = o.z.sample(256), b = orbit.z.sample(256);
      for (int k = 0; k < 256; ++k)
        sup = std::max(sup, (a.col(k) - b.col(k)).norm());
      if (sup < opts.distinct_tol) return;
    }
    found.push_back(std::move(orbit));
  };

  for (const auto& cp : critical_points) {
    ++local.seeds;
    if (cp.degenerate) {
      ++local.failed;
      continue;
    }
    try {
      ContinuationResult branch = continue_in_epsilon(ctx, cp, epsilon, 400, opts.bvp);
      if (branch.reached_target)
        offer(std::move(branch.orbit));
      else
        ++local.failed;
    } catch (const std::exception&) {
      ++local.failed;
    }
  }

  // Loop seeds z = H + rho (cos 2 pi w t, sin 2 pi w t) target the planar
  // winding classes.
  if (ctx.dimension() == 2 && ctx.curves().component_count() == 1) {
    const PeriodicCurve& H = ctx.curves().curves[0];
    const double radius = ctx.curve_radius();
    const int M = 2 * opts.bvp.modes + 1;
    for (int w : opts.winding_classes) {
      for (double rho : {0.1, 0.3, 1.0}) {
        ++local.seeds;
        Mat guess(2, M);
        for (int j = 0; j < M; ++j) {
          const double t = static_cast<double>(j) / M;
          const Vec base = H.eval(t);
          guess(0, j) = base[0] + rho * radius * std::cos(kTwoPi * w * t);
          guess(1, j) = base[1] + rho * radius * std::sin(kTwoPi * w * t);
        }
        try {
          offer(solve_bvp(ctx, epsilon, guess, opts.bvp));
        } catch (const std::exception&) {
          ++local.failed;
        }
      }
    }
  }

  // Random constant seeds over the default search box.
  const Box box = default_search_box(ctx);
  const std::uint64_t offset = (opts.seed % 1009) * static_cast<std::uint64_t>(opts.n_random);
  for (int i = 0; i < opts.n_random; ++i) {
    ++local.seeds;
    const Vec x = halton_point(offset + i + 1, box);
    try {
      if (ctx.distance_to_curves(x) < 10 * collision_floor(ctx, opts.bvp)) {
        ++local.failed;
        continue;
      }
      offer(solve_bvp_constant(ctx, epsilon, x, opts.bvp));
    } catch (const std::exception&) {
      ++local.failed;
    }
  }

  if (stats) *stats = local;
  return found;
}

}  // namespace keptop
