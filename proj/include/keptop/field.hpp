#pragma once

#include <memory>
#include <mutex>
#include <unordered_map>

#include "keptop/common.hpp"
#include "keptop/curve.hpp"

namespace keptop {

enum class ForceSign { attractive, repulsive };

/// Singular central kernel g(u) = |u|^{-(q-1)} with the force sign of the
/// underlying problem. The exponent is restricted to q >= 2.
struct Kernel {
  double q = 2.0;
  ForceSign sign = ForceSign::attractive;

  void validate() const {
    if (q < 2.0) throw ValidationError("kernel exponent q must be >= 2");
  }
  double sign_factor() const { return sign == ForceSign::attractive ? 1.0 : -1.0; }
};

double g_eval(const Vec& u, double q);
Vec grad_g(const Vec& u, double q);
Mat hess_g(const Vec& u, double q);

/// Time averages of the kernel along one or several closed curves:
///   G(x)  = sum_i \int_0^1 g(x - k_i(t)) dt
/// and its gradient/Hessian, plus the averaged force
///   F(x)  = \int_0^1 (x - H(t)) / |x - H(t)|^{q+1} dt = -grad G / (q-1)
/// for single-curve contexts. Quadrature is the uniform trapezoid rule on
/// [0,1), which converges spectrally for analytic integrands; the node count
/// is raised automatically near the curves (up to a cap) before a value is
/// trusted.
class ForceContext {
 public:
  ForceContext(CurveSet curves, Kernel kernel, int quadrature_nodes = 256,
               double exclusion_distance = 1e-3);

  const CurveSet& curves() const { return curves_; }
  const Kernel& kernel() const { return kernel_; }
  int quadrature_nodes() const { return nodes_; }
  double exclusion_distance() const { return exclusion_; }
  double curve_radius() const { return radius_; }
  Vec curve_center() const { return center_; }
  int dimension() const { return curves_.dimension(); }

  double G(const Vec& x) const;
  Vec grad_G(const Vec& x) const;
  Mat hess_G(const Vec& x) const;
  Vec F(const Vec& x) const;

  // Fixed node count, no adaptivity; for convergence studies.
  double G_fixed(const Vec& x, int M) const;
  Vec grad_G_fixed(const Vec& x, int M) const;
  Mat hess_G_fixed(const Vec& x, int M) const;

  /// Distance from x to the nearest curve (cached polyline plus one Newton
  /// refinement of the nearest parameter). Also reports which curve.
  double distance_to_curves(const Vec& x, int* nearest_curve = nullptr) const;

  // Curve samples at the M uniform nodes, cached per (curve, M).
  const Mat& curve_samples(int curve_index, int M) const;

 private:
  int required_nodes(const Vec& x, int* nearest) const;

  CurveSet curves_;
  Kernel kernel_;
  int nodes_;
  double exclusion_;
  double radius_;
  Vec center_;
  std::vector<Mat> polylines_;  // 1024-point distance polylines

  mutable std::mutex cache_mutex_;
  mutable std::vector<std::unordered_map<int, std::unique_ptr<Mat>>> sample_cache_;

  static constexpr int kMaxNodes = 1 << 16;
};

}  // namespace keptop
