#pragma once

#include <optional>

#include "keptop/common.hpp"
#include "keptop/degree.hpp"
#include "keptop/field.hpp"

namespace keptop {

/// A zero of grad G with Morse data.
struct CriticalPoint {
  Vec x;
  double G_value = 0.0;
  double grad_norm = 0.0;
  Vec eigenvalues;        // of Hess G, ascending
  int morse_index = 0;    // negative eigenvalues of Hess G
  int local_degree = 0;   // (-1)^morse_index (meaningful when nondegenerate)
  double distance_to_K = 0.0;
  bool degenerate = false;
  bool fd_ok = true;      // Hessian cross-validated against finite differences
};

struct SearchStats {
  int starts = 0;
  int converged = 0;
  int dropped_nonconverged = 0;
  int dropped_near_curve = 0;
  int dropped_outside_box = 0;
};

struct SearchOptions {
  int n_starts = 512;
  double tol = 1e-11;        // gradient tolerance, relative to 1 + |G|
  std::uint64_t seed = 1;
  double exclusion_radius = 5e-3;  // converged points this close to K are dropped
  bool fd_check = true;
};

/// Damped multistart Newton on grad G over the box, deduplicated and sorted
/// lexicographically. Starts combine a Halton sweep of the box, offsets
/// along curve normals, and (in the plane) one start inside each bounded
/// complement component. Deterministic for a fixed seed.
std::vector<CriticalPoint> find_critical_points(const ForceContext& ctx, const Box& box,
                                                const SearchOptions& opts = {},
                                                SearchStats* stats = nullptr);

/// Search box for a context: curve bounding box expanded by its diameter.
Box default_search_box(const ForceContext& ctx);

/// Eigen-decomposition bookkeeping shared by classify and synthetic tests.
struct SpectrumClassification {
  Vec eigenvalues;
  int morse_index = 0;
  int local_degree = 0;
  bool degenerate = false;
};
SpectrumClassification classify_spectrum(const Mat& hess, double rel_tol = 1e-6);

/// Complete a converged point with eigenvalues, Morse index, local degree and
/// the optional finite-difference Hessian cross-check.
CriticalPoint classify(const ForceContext& ctx, Vec x, bool fd_check = true);

/// Index-wise counts of the critical points of -G on the curve complement in
/// R^3 (m_i counts index i of -G, i.e. Morse index 3-i of G).
struct MorseCensus {
  int m1 = 0, m2 = 0, m3 = 0;
  bool identity_holds = false;  // m2 - m1 == m3 + 1
  int degree_sum = 0;           // sum of sign det(-Hess G) over the points
  int far_field_degree = 0;     // degree of -grad G over a large sphere
  bool exhaustive = false;      // degree_sum == far_field_degree
};

/// Census over classified, nondegenerate points of a 3D context. Refuses
/// degenerate points. The exhaustiveness heuristic compares the local degree
/// sum with the far-field degree; it can confirm a complete search but never
/// certifies one.
MorseCensus morse_census(const ForceContext& ctx, const std::vector<CriticalPoint>& points);

/// Tunnel-number lower bound check: count >= 2 t + 1.
inline bool knot_bound_check(int critical_count, int tunnel_number) {
  return critical_count >= 2 * tunnel_number + 1;
}

}  // namespace keptop
