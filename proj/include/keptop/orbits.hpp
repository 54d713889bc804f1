#pragma once

#include <optional>
#include <string>

#include "keptop/common.hpp"
#include "keptop/critical.hpp"
#include "keptop/field.hpp"

namespace keptop {

/// Thrown when an iterate approaches the forcing curves closer than the
/// collision floor.
struct NearCollisionError : std::runtime_error {
  NearCollisionError(const std::string& msg, int node_) : std::runtime_error(msg), node(node_) {}
  int node;
};
/// Thrown when the collocation Newton iteration fails to converge.
struct SolveError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// epsilon = lambda^{-(q+1)}
double lambda_from_epsilon(double epsilon, double q);
double epsilon_from_lambda(double lambda, double q);

/// Refuse level requests the problem cannot serve: the repulsive problem has
/// no periodic solutions at lambda = 0, and the solver only covers positive
/// forcing levels.
void validate_lambda_request(const Kernel& kernel, double lambda);

/// A collocation solution of the rescaled problem
///   z'' = -sigma eps sum_i (z - k_i(t)) / |z - k_i(t)|^{q+1}
/// (sigma = +1 attractive, -1 repulsive) with periodic boundary conditions.
struct PeriodicOrbit {
  double epsilon = 0.0;
  double lambda = 0.0;  // infinity at epsilon = 0
  PeriodicCurve z;
  int modes = 0;
  int newton_iterations = 0;
  double residual_sup = 0.0;       // certified on a 4x finer node set
  double grad_scale = 0.0;         // max of sum_i |grad g(z - k_i)| over the orbit
  double min_distance_to_K = 0.0;  // min over t of min_i |z(t) - k_i(t)|
  std::optional<int> winding;      // planar problems: winding of u = z - H around 0
  double monodromy_gap = -1.0;     // |det(M - Id)|, filled by nondegeneracy()
  bool nondegenerate = false;
};

/// Residual acceptance threshold of an orbit: 1e-8 max(1, eps * grad scale).
double residual_tolerance(const PeriodicOrbit& orbit);
inline bool residual_certified(const PeriodicOrbit& orbit) {
  return orbit.residual_sup < residual_tolerance(orbit);
}

struct BvpOptions {
  int modes = 64;           // N; collocation uses M = 2N+1 nodes
  double tol = 1e-12;
  int max_iterations = 50;
  double d_min = -1.0;      // collision floor; < 0 means 1e-2 * curve radius
  int max_modes = 512;      // cap for adaptive refinement
};

/// Smallest mode count >= base whose node quadrature resolves the averaged
/// field at x (doubling the rule moves grad G by less than a relative 1e-9).
int adequate_modes(const ForceContext& ctx, const Vec& x, int base_modes,
                   int max_modes = 512);

/// Re-solve at doubled mode counts until the certified residual passes (or
/// the cap is reached, in which case the last attempt is returned as-is).
PeriodicOrbit refine_until_certified(const ForceContext& ctx, PeriodicOrbit orbit,
                                     const BvpOptions& opts);

/// Newton on the collocation system from node-value initial data (n x M).
PeriodicOrbit solve_bvp(const ForceContext& ctx, double epsilon, const Mat& guess_nodes,
                        const BvpOptions& opts = {});
PeriodicOrbit solve_bvp(const ForceContext& ctx, double epsilon, const PeriodicCurve& guess,
                        const BvpOptions& opts = {});
PeriodicOrbit solve_bvp_constant(const ForceContext& ctx, double epsilon, const Vec& point,
                                 const BvpOptions& opts = {});

struct ContinuationResult {
  PeriodicOrbit orbit;        // at the furthest epsilon reached
  bool reached_target = false;
  double epsilon_reached = 0.0;
  int steps = 0;
  std::string obstruction;    // empty when the target was reached
};

/// Natural-parameter continuation from a nondegenerate critical point of G at
/// epsilon = 0: adaptive steps (halve on failure, grow on fast convergence),
/// stopping at the target or at the reported obstruction.
ContinuationResult continue_in_epsilon(const ForceContext& ctx, const CriticalPoint& start,
                                       double epsilon_target, int max_steps = 400,
                                       const BvpOptions& opts = {});

/// The physical solution u = lambda (z - H) of the original problem
///   u'' +- u/|u|^{q+1} = lambda h,  h = -H''.
struct PhysicalOrbit {
  PeriodicCurve u;
  double lambda = 0.0;
  double residual_sup = 0.0;  // of the original equation on the fine node set
  double min_norm = 0.0;      // min over t of |u(t)|
  double max_norm = 0.0;
};

PhysicalOrbit to_physical(const ForceContext& ctx, const PeriodicOrbit& orbit);

/// Max residual of the energy identity dE/dt = lambda <u', h> with
/// E = |u'|^2/2 + s /((q-1)|u|^{q-1}), where s = +1 for the repulsive sign
/// and -1 for the attractive one.
double energy_check(const PeriodicCurve& u, const PeriodicCurve& h, double lambda, double q,
                    ForceSign sign, int nodes = 1024);

struct MonodromyResult {
  Mat monodromy;            // 2n x 2n period map of the variational system
  Eigen::VectorXcd eigenvalues;
  double gap = 0.0;         // |det(M - Id)|
  bool nondegenerate = false;
};

/// Integrate the first-order variational system over one period with an
/// adaptive embedded Runge-Kutta pair (local tolerance 1e-10).
MonodromyResult nondegeneracy(const ForceContext& ctx, const PeriodicOrbit& orbit,
                              double local_tol = 1e-10);

/// Number of equivalence classes under pairwise sup-distance < tol.
int distinct_count(const std::vector<PeriodicOrbit>& orbits, double tol = 1e-3);

struct MultistartOptions {
  BvpOptions bvp;
  std::vector<int> winding_classes;  // loop seeds around H per winding value
  int n_random = 32;
  std::uint64_t seed = 1;
  double distinct_tol = 1e-3;
};

struct MultistartStats {
  int seeds = 0;
  int converged = 0;
  int failed = 0;
};

/// Orbits at a fixed epsilon from: continuations of the supplied critical
/// points, winding-class loops around H (planar contexts), and random
/// constant seeds. Deduplicated; planar orbits carry their winding tag.
std::vector<PeriodicOrbit> multistart_search(const ForceContext& ctx, double epsilon,
                                             const std::vector<CriticalPoint>& critical_points,
                                             const MultistartOptions& opts = {},
                                             MultistartStats* stats = nullptr);

}  // namespace keptop
