#include "keptop/field.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace keptop {

double g_eval(const Vec& u, double q) {
  const double r = u.norm();
  if (r <= 0.0) throw SingularityError("kernel evaluated at zero distance");
  return std::pow(r, -(q - 1.0));
}

Vec grad_g(const Vec& u, double q) {
  const double r = u.norm();
  if (r <= 0.0) throw SingularityError("kernel gradient at zero distance");
  return -(q - 1.0) * std::pow(r, -(q + 1.0)) * u;
}

Mat hess_g(const Vec& u, double q) {
  const double r = u.norm();
  if (r <= 0.0) throw SingularityError("kernel Hessian at zero distance");
  const int n = static_cast<int>(u.size());
  const double rm = std::pow(r, -(q + 1.0));
  return -(q - 1.0) *
         (rm * Mat::Identity(n, n) - (q + 1.0) * rm / (r * r) * (u * u.transpose()));
}

ForceContext::ForceContext(CurveSet curves, Kernel kernel, int quadrature_nodes,
                           double exclusion_distance)
    : curves_(std::move(curves)),
      kernel_(kernel),
      nodes_(quadrature_nodes),
      exclusion_(exclusion_distance) {
  kernel_.validate();
  if (nodes_ < 64) throw ValidationError("quadrature needs at least 64 nodes");
  if (exclusion_ <= 0.0) throw ValidationError("exclusion distance must be positive");
  radius_ = curves_.radius();
  center_ = curves_.center();
  polylines_ = curves_.sample_all(1024);
  sample_cache_.resize(curves_.curves.size());
}

const Mat& ForceContext::curve_samples(int curve_index, int M) const {
  std::lock_guard<std::mutex> lock(cache_mutex_);
  auto& slot = sample_cache_[curve_index][M];
  if (!slot) slot = std::make_unique<Mat>(curves_.curves[curve_index].sample(M));
  return *slot;
}

double ForceContext::distance_to_curves(const Vec& x, int* nearest_curve) const {
  double best = std::numeric_limits<double>::infinity();
  int best_curve = -1;
  double best_t = 0.0;
  for (size_t c = 0; c < polylines_.size(); ++c) {
    const Mat& poly = polylines_[c];
    for (int j = 0; j < poly.cols(); ++j) {
      const double d = (x - poly.col(j)).norm();
      if (d < best) {
        best = d;
        best_curve = static_cast<int>(c);
        best_t = static_cast<double>(j) / poly.cols();
      }
    }
  }
  // One Newton step on phi(t) = <gamma(t) - x, gamma'(t)> sharpens the
  // vertex distance to the smooth curve.
  const PeriodicCurve& curve = curves_.curves[best_curve];
  double t = best_t;
  for (int it = 0; it < 2; ++it) {
    const Vec gamma = curve.eval(t), dg = curve.eval(t, 1), ddg = curve.eval(t, 2);
    const double phi = (gamma - x).dot(dg);
    const double dphi = dg.squaredNorm() + (gamma - x).dot(ddg);
    if (std::abs(dphi) < 1e-300) break;
    const double step = phi / dphi;
    if (std::abs(step) > 2.0 / 1024.0) break;  // refinement left the vertex's segment
    t -= step;
  }
  best = std::min(best, (x - curve.eval(t)).norm());
  if (nearest_curve) *nearest_curve = best_curve;
  return best;
}

int ForceContext::required_nodes(const Vec& x, int* nearest) const {
  const double d = distance_to_curves(x, nearest);
  if (d <= exclusion_) {
    throw ProximityError("evaluation point is inside the exclusion distance of curve " +
                             std::to_string(nearest ? *nearest : -1),
                         nearest ? *nearest : -1);
  }
  int M = nodes_;
  while (M < 32.0 / d && M < kMaxNodes) M *= 2;
  if (M >= kMaxNodes && M < 32.0 / d)
    throw ProximityError("quadrature cap reached near curve " +
                             std::to_string(nearest ? *nearest : -1),
                         nearest ? *nearest : -1);
  return M;
}

double ForceContext::G_fixed(const Vec& x, int M) const {
  double sum = 0.0;
  for (size_t c = 0; c < curves_.curves.size(); ++c) {
    const Mat& s = curve_samples(static_cast<int>(c), M);
    double acc = 0.0;
    for (int j = 0; j < M; ++j) acc += g_eval(x - s.col(j), kernel_.q);
    sum += acc / M;
  }
  return sum;
}

Vec ForceContext::grad_G_fixed(const Vec& x, int M) const {
  Vec sum = Vec::Zero(x.size());
  for (size_t c = 0; c < curves_.curves.size(); ++c) {
    const Mat& s = curve_samples(static_cast<int>(c), M);
    Vec acc = Vec::Zero(x.size());
    for (int j = 0; j < M; ++j) acc += grad_g(x - s.col(j), kernel_.q);
    sum += acc / M;
  }
  return sum;
}

Mat ForceContext::hess_G_fixed(const Vec& x, int M) const {
  Mat sum = Mat::Zero(x.size(), x.size());
  for (size_t c = 0; c < curves_.curves.size(); ++c) {
    const Mat& s = curve_samples(static_cast<int>(c), M);
    Mat acc = Mat::Zero(x.size(), x.size());
    for (int j = 0; j < M; ++j) acc += hess_g(x - s.col(j), kernel_.q);
    sum += acc / M;
  }
  return sum;
}

double ForceContext::G(const Vec& x) const { return G_fixed(x, required_nodes(x, nullptr)); }

Vec ForceContext::grad_G(const Vec& x) const {
  return grad_G_fixed(x, required_nodes(x, nullptr));
}

Mat ForceContext::hess_G(const Vec& x) const {
  return hess_G_fixed(x, required_nodes(x, nullptr));
}

Vec ForceContext::F(const Vec& x) const {
  if (curves_.curves.size() != 1)
    throw ValidationError("the averaged force F is defined for single-curve contexts");
  return -grad_G(x) / (kernel_.q - 1.0);
}

}  // namespace keptop
