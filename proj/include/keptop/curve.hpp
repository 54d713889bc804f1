#pragma once

#include <complex>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "keptop/common.hpp"

namespace keptop {

/// A closed curve of period 1 in R^n stored as a finite Fourier series
///   x(t) = sum_{k=-K..K} c_k e^{2 pi i k t},
/// with the reality condition c_{-k} = conj(c_k) so evaluations are real.
class PeriodicCurve {
 public:
  PeriodicCurve() = default;

  // Coefficient matrix is n x (2K+1); column index k+K holds c_k.
  static PeriodicCurve from_coefficients(Eigen::MatrixXcd coeffs);

  // Modes for k >= 0 only; negative modes are filled by conjugation and c_0
  // is required to be real.
  static PeriodicCurve from_modes(int dimension,
                                  const std::map<int, Eigen::VectorXcd>& modes);

  // Planar curve written in complex notation, x(t) + i y(t) = sum a_k e^{2 pi i k t}.
  // The a_k are arbitrary complex numbers (no conjugation constraint).
  static PeriodicCurve from_complex_modes(const std::map<int, std::complex<double>>& modes);

  // Trigonometric interpolation of uniformly spaced samples (n x M matrix,
  // sample j at t = j/M). Modes above max_modes or below drop_tol (relative
  // to the largest) are discarded.
  static PeriodicCurve from_samples(const Mat& samples, int max_modes,
                                    double drop_tol = 1e-13);

  int dimension() const { return static_cast<int>(coeff_.rows()); }
  int max_mode() const { return (static_cast<int>(coeff_.cols()) - 1) / 2; }
  Eigen::VectorXcd mode(int k) const;
  const Eigen::MatrixXcd& coefficients() const { return coeff_; }

  /// Evaluate the curve or one of its derivatives (order <= 2 supported).
  Vec eval(double t, int derivative_order = 0) const;

  // Values at the M uniform nodes t_j = j/M, as an n x M matrix.
  Mat sample(int M, int derivative_order = 0) const;

  Vec mean() const;
  bool has_zero_mean(double tol = 0.0) const;

  /// H with H'' = -(*this), normalized to zero mean. Requires zero mean input.
  PeriodicCurve second_primitive() const;

  // Coefficient-wise derivative of the given order.
  PeriodicCurve derivative(int order = 1) const;

  PeriodicCurve translated(const Vec& offset) const;
  PeriodicCurve scaled(double factor) const;
  PeriodicCurve embedded_in_3d() const;  // planar curve into the z = 0 plane

  // Sum of two curves of equal dimension (used for k_i = H + p_i).
  PeriodicCurve plus(const PeriodicCurve& other) const;

  // Max distance from the mean over a dense sample; the curve's size scale.
  double radius() const;

 private:
  Eigen::MatrixXcd coeff_;  // n x (2K+1)
};

/// A finite set of closed curves sharing one ambient dimension.
struct CurveSet {
  std::vector<PeriodicCurve> curves;

  int component_count() const { return static_cast<int>(curves.size()); }
  int dimension() const;
  Vec center() const;    // mean of curve means
  double radius() const; // max distance from center over all curves

  std::vector<Mat> sample_all(int M) const;
};

/// One transverse double point of the sampled curve set.
struct DoublePoint {
  int curve_a = 0, curve_b = 0;
  double t_a = 0.0, t_b = 0.0;
  Vec point;
  double angle = 0.0;  // crossing angle of the two tangents
};

struct IntersectionReport {
  std::vector<DoublePoint> transverse;
  // Contacts whose crossing angle is below angle_tol; these make invariants
  // that need generic position unreliable.
  std::vector<DoublePoint> tangential;
};

/// Detect double points of the set by polyline proximity followed by a
/// Gauss-Newton refinement on the smooth curves. Segment pairs closer than
/// 2/samples in parameter on the same curve are skipped; each double point
/// is reported once.
IntersectionReport self_intersections(const CurveSet& set, int samples = 1024,
                                      double tol = -1.0, double angle_tol = 0.05);

struct CatalogParams {
  double l = 1.5707963267948966;  // arc half-angle
  int p = 2, q = 3;               // torus knot indices
  int c = 2;                      // unlink component count
  double separation = 4.0;        // unlink center spacing
  int dimension = 0;              // 0 = natural dimension of the entry
};

/// Named test curves. Planar entries: circle, epicycloid, arc, segment,
/// lemniscate. Spatial entries: unknot, trefoil, torus, figure8, granny,
/// unlink, hopf. Unknown names are rejected.
CurveSet catalog(const std::string& name, const CatalogParams& params = {});

// Convenience for single-curve catalog entries.
PeriodicCurve catalog_curve(const std::string& name, const CatalogParams& params = {});

}  // namespace keptop
