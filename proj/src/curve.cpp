#include "keptop/curve.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

namespace keptop {

namespace {

using Cplx = std::complex<double>;

// (2 pi i k)^order
Cplx derivative_factor(int k, int order) {
  Cplx w(0.0, kTwoPi * k);
  Cplx f(1.0, 0.0);
  for (int i = 0; i < order; ++i) f *= w;
  return f;
}

}  // namespace

PeriodicCurve PeriodicCurve::from_coefficients(Eigen::MatrixXcd coeffs) {
  if (coeffs.rows() < 1 || coeffs.cols() % 2 != 1)
    throw ValidationError("curve coefficients must be n x (2K+1)");
  const int K = (static_cast<int>(coeffs.cols()) - 1) / 2;
  const double scale = std::max(1.0, coeffs.cwiseAbs().maxCoeff());
  for (int k = 0; k <= K; ++k) {
    Eigen::VectorXcd diff = coeffs.col(K - k) - coeffs.col(K + k).conjugate();
    if (diff.cwiseAbs().maxCoeff() > 1e-12 * scale)
      throw ValidationError("curve coefficients violate c_{-k} = conj(c_k)");
  }
  // Snap to the exact reality condition so evaluations are exactly real.
  for (int k = 1; k <= K; ++k) coeffs.col(K - k) = coeffs.col(K + k).conjugate();
  coeffs.col(K) = coeffs.col(K).real().cast<Cplx>();
  PeriodicCurve c;
  c.coeff_ = std::move(coeffs);
  return c;
}

PeriodicCurve PeriodicCurve::from_modes(int dimension,
                                        const std::map<int, Eigen::VectorXcd>& modes) {
  int K = 0;
  for (const auto& [k, v] : modes) {
    if (k < 0) throw ValidationError("from_modes expects k >= 0");
    if (v.size() != dimension) throw ValidationError("mode dimension mismatch");
    K = std::max(K, k);
  }
  Eigen::MatrixXcd coeffs = Eigen::MatrixXcd::Zero(dimension, 2 * K + 1);
  for (const auto& [k, v] : modes) {
    coeffs.col(K + k) = v;
    if (k > 0) coeffs.col(K - k) = v.conjugate();
  }
  return from_coefficients(std::move(coeffs));
}

PeriodicCurve PeriodicCurve::from_complex_modes(
    const std::map<int, std::complex<double>>& modes) {
  int K = 0;
  for (const auto& [k, a] : modes) K = std::max(K, std::abs(k));
  Eigen::MatrixXcd coeffs = Eigen::MatrixXcd::Zero(2, 2 * K + 1);
  // x + i y = sum a_k e^{2 pi i k t}  =>  c_k^x = (a_k + conj(a_{-k}))/2,
  // c_k^y = (a_k - conj(a_{-k}))/(2i).
  for (int k = -K; k <= K; ++k) {
    Cplx ak(0.0, 0.0), amk(0.0, 0.0);
    if (auto it = modes.find(k); it != modes.end()) ak = it->second;
    if (auto it = modes.find(-k); it != modes.end()) amk = it->second;
    coeffs(0, K + k) = 0.5 * (ak + std::conj(amk));
    coeffs(1, K + k) = Cplx(0.0, -0.5) * (ak - std::conj(amk));
  }
  return from_coefficients(std::move(coeffs));
}

PeriodicCurve PeriodicCurve::from_samples(const Mat& samples, int max_modes,
                                          double drop_tol) {
  const int n = static_cast<int>(samples.rows());
  const int M = static_cast<int>(samples.cols());
  if (M < 2 * max_modes + 1)
    throw ValidationError("from_samples needs at least 2*max_modes+1 samples");
  Eigen::MatrixXcd coeffs = Eigen::MatrixXcd::Zero(n, 2 * max_modes + 1);
  for (int k = -max_modes; k <= max_modes; ++k) {
    Eigen::VectorXcd ck = Eigen::VectorXcd::Zero(n);
    for (int j = 0; j < M; ++j) {
      const double ang = -kTwoPi * k * j / M;
      ck += samples.col(j) * Cplx(std::cos(ang), std::sin(ang));
    }
    coeffs.col(max_modes + k) = ck / static_cast<double>(M);
  }
  // Trim negligible outer modes to keep evaluation cheap.
  const double scale = coeffs.cwiseAbs().maxCoeff();
  int K = max_modes;
  while (K > 0 && coeffs.col(max_modes + K).cwiseAbs().maxCoeff() <= drop_tol * scale &&
         coeffs.col(max_modes - K).cwiseAbs().maxCoeff() <= drop_tol * scale)
    --K;
  return from_coefficients(coeffs.middleCols(max_modes - K, 2 * K + 1));
}

Eigen::VectorXcd PeriodicCurve::mode(int k) const {
  const int K = max_mode();
  if (std::abs(k) > K) return Eigen::VectorXcd::Zero(dimension());
  return coeff_.col(K + k);
}

Vec PeriodicCurve::eval(double t, int derivative_order) const {
  if (derivative_order < 0 || derivative_order > 2)
    throw ValidationError("derivative_order must be 0, 1 or 2");
  const int K = max_mode();
  Vec out = Vec::Zero(dimension());
  if (derivative_order == 0) out = coeff_.col(K).real();
  for (int k = 1; k <= K; ++k) {
    const Cplx e(std::cos(kTwoPi * k * t), std::sin(kTwoPi * k * t));
    const Cplx f = derivative_factor(k, derivative_order) * e;
    // c_{-k} term is the conjugate, so the pair sums to twice the real part.
    out += 2.0 * (coeff_.col(K + k) * f).real();
  }
  return out;
}

Mat PeriodicCurve::sample(int M, int derivative_order) const {
  Mat out(dimension(), M);
  for (int j = 0; j < M; ++j)
    out.col(j) = eval(static_cast<double>(j) / M, derivative_order);
  return out;
}

Vec PeriodicCurve::mean() const { return coeff_.col(max_mode()).real(); }

bool PeriodicCurve::has_zero_mean(double tol) const { return mean().norm() <= tol; }

PeriodicCurve PeriodicCurve::second_primitive() const {
  if (!has_zero_mean(1e-12 * std::max(1.0, coeff_.cwiseAbs().maxCoeff())))
    throw ValidationError(
        "second_primitive requires a zero-mean forcing (the mean of h over one "
        "period must vanish)");
  const int K = max_mode();
  Eigen::MatrixXcd coeffs = coeff_;
  coeffs.col(K).setZero();  // zero-mean normalization of H
  for (int k = 1; k <= K; ++k) {
    const double denom = (kTwoPi * k) * (kTwoPi * k);
    coeffs.col(K + k) /= denom;
    coeffs.col(K - k) /= denom;
  }
  return from_coefficients(std::move(coeffs));
}

PeriodicCurve PeriodicCurve::derivative(int order) const {
  const int K = max_mode();
  Eigen::MatrixXcd coeffs = coeff_;
  for (int k = -K; k <= K; ++k) coeffs.col(K + k) *= derivative_factor(k, order);
  return from_coefficients(std::move(coeffs));
}

PeriodicCurve PeriodicCurve::translated(const Vec& offset) const {
  if (offset.size() != dimension()) throw ValidationError("translation dimension mismatch");
  Eigen::MatrixXcd coeffs = coeff_;
  coeffs.col(max_mode()) += offset.cast<Cplx>();
  return from_coefficients(std::move(coeffs));
}

PeriodicCurve PeriodicCurve::scaled(double factor) const {
  return from_coefficients(coeff_ * factor);
}

PeriodicCurve PeriodicCurve::embedded_in_3d() const {
  if (dimension() != 2) throw ValidationError("embedded_in_3d expects a planar curve");
  Eigen::MatrixXcd coeffs = Eigen::MatrixXcd::Zero(3, coeff_.cols());
  coeffs.topRows(2) = coeff_;
  return from_coefficients(std::move(coeffs));
}

PeriodicCurve PeriodicCurve::plus(const PeriodicCurve& other) const {
  if (other.dimension() != dimension()) throw ValidationError("curve sum dimension mismatch");
  const int K = std::max(max_mode(), other.max_mode());
  Eigen::MatrixXcd coeffs = Eigen::MatrixXcd::Zero(dimension(), 2 * K + 1);
  for (int k = -K; k <= K; ++k) coeffs.col(K + k) = mode(k) + other.mode(k);
  return from_coefficients(std::move(coeffs));
}

double PeriodicCurve::radius() const {
  const Vec m = mean();
  double r = 0.0;
  for (int j = 0; j < 1024; ++j)
    r = std::max(r, (eval(j / 1024.0) - m).norm());
  return r;
}

int CurveSet::dimension() const {
  if (curves.empty()) throw ValidationError("empty curve set");
  const int n = curves.front().dimension();
  for (const auto& c : curves)
    if (c.dimension() != n) throw ValidationError("curve set mixes dimensions");
  return n;
}

Vec CurveSet::center() const {
  Vec c = Vec::Zero(dimension());
  for (const auto& curve : curves) c += curve.mean();
  return c / static_cast<double>(curves.size());
}

double CurveSet::radius() const {
  const Vec c = center();
  double r = 0.0;
  for (const auto& curve : curves)
    for (int j = 0; j < 1024; ++j)
      r = std::max(r, (curve.eval(j / 1024.0) - c).norm());
  return r;
}

std::vector<Mat> CurveSet::sample_all(int M) const {
  std::vector<Mat> out;
  out.reserve(curves.size());
  for (const auto& c : curves) out.push_back(c.sample(M));
  return out;
}

// ---------------------------------------------------------------------------
// Self-intersections
// ---------------------------------------------------------------------------

namespace {

// Closest-approach parameters of two segments, clamped to [0,1]^2.
void segment_closest(const Vec& a0, const Vec& a1, const Vec& b0, const Vec& b1,
                     double& s, double& u) {
  const Vec d1 = a1 - a0, d2 = b1 - b0, r = a0 - b0;
  const double A = d1.dot(d1), B = d1.dot(d2), C = d2.dot(d2);
  const double D = d1.dot(r), E = d2.dot(r);
  const double det = A * C - B * B;
  if (det > 1e-14 * A * C) {
    s = std::clamp((B * E - C * D) / det, 0.0, 1.0);
  } else {
    s = 0.0;  // near-parallel; endpoint projection is good enough
  }
  u = C > 0 ? std::clamp((B * s + E) / C, 0.0, 1.0) : 0.0;
  // One re-projection pass tightens the clamped solution.
  if (A > 0) s = std::clamp((B * u - D) / A, 0.0, 1.0);
  if (C > 0) u = std::clamp((B * s + E) / C, 0.0, 1.0);
}

double circ_dist(double a, double b) {
  double d = std::abs(a - b);
  return std::min(d, 1.0 - d);
}

// Gauss-Newton on |x(t) - y(s)|^2 for the smooth curves.
bool refine_pair(const PeriodicCurve& ca, const PeriodicCurve& cb, double& t,
                 double& s, bool same_curve, double min_param_gap) {
  for (int it = 0; it < 40; ++it) {
    const Vec xa = ca.eval(t), xb = cb.eval(s);
    const Vec da = ca.eval(t, 1), db = cb.eval(s, 1);
    const Vec diff = xa - xb;
    Eigen::Vector2d g(diff.dot(da), -diff.dot(db));
    Eigen::Matrix2d Hh;
    Hh(0, 0) = da.dot(da) + diff.dot(ca.eval(t, 2));
    Hh(1, 1) = db.dot(db) - diff.dot(cb.eval(s, 2));
    Hh(0, 1) = Hh(1, 0) = -da.dot(db);
    // Fall back to plain Gauss-Newton curvature if the Hessian degenerates.
    if (std::abs(Hh.determinant()) < 1e-12 * (1 + Hh.cwiseAbs().maxCoeff())) {
      Hh(0, 0) = da.dot(da);
      Hh(1, 1) = db.dot(db);
    }
    Eigen::Vector2d step = Hh.ldlt().solve(-g);
    const double cap = 0.25 / std::max(1, std::max(ca.max_mode(), cb.max_mode()));
    if (step.norm() > cap) step *= cap / step.norm();
    t += step[0];
    s += step[1];
    t -= std::floor(t);
    s -= std::floor(s);
    if (same_curve && circ_dist(t, s) < min_param_gap) return false;
    if (step.norm() < 1e-13) break;
  }
  return true;
}

}  // namespace

IntersectionReport self_intersections(const CurveSet& set, int samples, double tol,
                                      double angle_tol) {
  if (samples < 64) throw ValidationError("self_intersections needs samples >= 64");
  const double scale = std::max(set.radius(), 1e-12);
  if (tol < 0) tol = 2e-3 * scale;
  const double refined_tol = 1e-8 * scale;
  const double param_gap = 2.0 / samples;

  const auto polys = set.sample_all(samples);
  const int nc = set.component_count();

  IntersectionReport report;
  auto already_reported = [&](const std::vector<DoublePoint>& list, int ca, int cb,
                              double ta, double tb) {
    for (const auto& d : list) {
      if (d.curve_a == ca && d.curve_b == cb && circ_dist(d.t_a, ta) < 4 * param_gap &&
          circ_dist(d.t_b, tb) < 4 * param_gap)
        return true;
      if (ca == cb && d.curve_a == ca && circ_dist(d.t_a, tb) < 4 * param_gap &&
          circ_dist(d.t_b, ta) < 4 * param_gap)
        return true;
    }
    return false;
  };

  for (int a = 0; a < nc; ++a) {
    for (int b = a; b < nc; ++b) {
      const Mat& pa = polys[a];
      const Mat& pb = polys[b];
      for (int i = 0; i < samples; ++i) {
        const int i1 = (i + 1) % samples;
        const int jstart = (a == b) ? i + 1 : 0;
        for (int j = jstart; j < samples; ++j) {
          if (a == b && circ_dist(static_cast<double>(i) / samples,
                                  static_cast<double>(j) / samples) < param_gap)
            continue;
          const int j1 = (j + 1) % samples;
          double s, u;
          segment_closest(pa.col(i), pa.col(i1), pb.col(j), pb.col(j1), s, u);
          const Vec qa = pa.col(i) + s * (pa.col(i1) - pa.col(i));
          const Vec qb = pb.col(j) + u * (pb.col(j1) - pb.col(j));
          if ((qa - qb).norm() > tol) continue;

          double ta = (i + s) / samples, tb = (j + u) / samples;
          if (!refine_pair(set.curves[a], set.curves[b], ta, tb, a == b, param_gap))
            continue;
          const Vec xa = set.curves[a].eval(ta);
          const Vec xb = set.curves[b].eval(tb);
          if ((xa - xb).norm() > refined_tol) continue;  // near miss, not a crossing

          const Vec va = set.curves[a].eval(ta, 1).normalized();
          const Vec vb = set.curves[b].eval(tb, 1).normalized();
          const double cross_angle = std::asin(std::min(
              1.0, std::sqrt(std::max(0.0, 1.0 - std::pow(va.dot(vb), 2)))));

          DoublePoint dp;
          dp.curve_a = a;
          dp.curve_b = b;
          dp.t_a = ta;
          dp.t_b = tb;
          dp.point = 0.5 * (xa + xb);
          dp.angle = cross_angle;
          if (cross_angle < angle_tol) {
            if (!already_reported(report.tangential, a, b, ta, tb))
              report.tangential.push_back(dp);
          } else {
            if (!already_reported(report.transverse, a, b, ta, tb))
              report.transverse.push_back(dp);
          }
        }
      }
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Catalog
// ---------------------------------------------------------------------------

namespace {

PeriodicCurve circle_2d() {
  return PeriodicCurve::from_complex_modes({{1, {1.0, 0.0}}});
}

PeriodicCurve epicycloid_2d() {
  return PeriodicCurve::from_complex_modes({{1, {1.0, 0.0}}, {3, {3.0, 0.0}}});
}

PeriodicCurve segment_2d() {
  std::map<int, Eigen::VectorXcd> modes;
  Eigen::VectorXcd c1(2);
  c1 << std::complex<double>(0.5, 0.0), std::complex<double>(0.0, 0.0);
  modes[1] = c1;
  return PeriodicCurve::from_modes(2, modes);
}

PeriodicCurve lemniscate_2d() {
  // (sin(2 pi t) cos(2 pi t), sin(2 pi t)): one transverse double point at 0.
  std::map<int, Eigen::VectorXcd> modes;
  Eigen::VectorXcd c1(2), c2(2);
  c1 << std::complex<double>(0.0, 0.0), std::complex<double>(0.0, -0.5);
  c2 << std::complex<double>(0.0, -0.25), std::complex<double>(0.0, 0.0);
  modes[1] = c1;
  modes[2] = c2;
  return PeriodicCurve::from_modes(2, modes);
}

PeriodicCurve sampled_closed_form(int dim, int max_modes,
                                  const std::function<Vec(double)>& f) {
  const int M = std::max(1024, 8 * max_modes);
  Mat samples(dim, M);
  for (int j = 0; j < M; ++j) samples.col(j) = f(static_cast<double>(j) / M);
  return PeriodicCurve::from_samples(samples, max_modes);
}

PeriodicCurve arc_2d(double l) {
  // e^{i l sin(2 pi t)}: image is the unit-circle arc of angles [-l, l].
  return sampled_closed_form(2, 48, [l](double t) {
    const double a = l * std::sin(kTwoPi * t);
    Vec p(2);
    p << std::cos(a), std::sin(a);
    return p;
  });
}

PeriodicCurve trefoil_3d() {
  return sampled_closed_form(3, 3, [](double t) {
    const double th = kTwoPi * t;
    Vec p(3);
    p << std::sin(th) + 2.0 * std::sin(2.0 * th),
        std::cos(th) - 2.0 * std::cos(2.0 * th), -std::sin(3.0 * th);
    return p;
  });
}

PeriodicCurve torus_knot_3d(int p, int q) {
  if (p < 1 || q < 1 || std::gcd(p, q) != 1)
    throw ValidationError("torus knot requires coprime p, q >= 1");
  const int max_modes = p + 2 * q + 2;
  return sampled_closed_form(3, max_modes, [p, q](double t) {
    const double lp = kTwoPi * p * t, lq = kTwoPi * q * t;
    Vec pt(3);
    pt << (2.0 + std::cos(lq)) * std::cos(lp), (2.0 + std::cos(lq)) * std::sin(lp),
        std::sin(lq);
    return pt;
  });
}

PeriodicCurve figure8_knot_3d() {
  return sampled_closed_form(3, 6, [](double t) {
    const double th = kTwoPi * t;
    Vec p(3);
    p << (2.0 + std::cos(2.0 * th)) * std::cos(3.0 * th),
        (2.0 + std::cos(2.0 * th)) * std::sin(3.0 * th), std::sin(4.0 * th);
    return p;
  });
}

// C^2 ramp used to blend braid twists without velocity jumps at junctions.
double smoothstep5(double s) {
  s = std::clamp(s, 0.0, 1.0);
  return s * s * s * (10.0 + s * (-15.0 + 6.0 * s));
}

// Granny knot = closure of the three-strand braid sigma1^3 sigma2^3
// (connected sum of two same-handed trefoils). Strand cross-section
// positions are twisted pairwise with a smooth profile, then the closure is
// wrapped around a circle of radius R and projected onto a Fourier basis.
PeriodicCurve granny_3d() {
  const double d = 0.5, R = 2.5;
  // Local strand position (xi, zeta) after braid fraction s in [0,1],
  // starting from slot `slot` in {0,1,2} at xi = (slot-1)*d.
  auto local = [&](int slot, double s) -> Eigen::Vector2d {
    const Eigen::Vector2d base((slot - 1) * d, 0.0);
    auto twist = [&](Eigen::Vector2d center, Eigen::Vector2d from, double frac) {
      const double th = 1.5 * kTwoPi * smoothstep5(frac);  // three half-twists
      const Eigen::Vector2d rel = from - center;
      return Eigen::Vector2d(center.x() + rel.x() * std::cos(th) - rel.y() * std::sin(th),
                             center.y() + rel.x() * std::sin(th) + rel.y() * std::cos(th));
    };
    const Eigen::Vector2d m12(-0.5 * d, 0.0), m23(0.5 * d, 0.0);
    if (s <= 0.5) {
      if (slot == 2) return base;  // right strand idle during sigma1^3
      return twist(m12, base, 2.0 * s);
    }
    // Positions after sigma1^3: the strands that started in slots 0, 1, 2
    // now sit at (0,0), (-d,0), (d,0). sigma2^3 twists the right pair.
    if (slot == 1) return Eigen::Vector2d(-d, 0.0);
    const Eigen::Vector2d mid = (slot == 0) ? Eigen::Vector2d(0.0, 0.0)
                                            : Eigen::Vector2d(d, 0.0);
    return twist(m23, mid, 2.0 * (s - 0.5));
  };
  // The braid permutation sends slot 0 -> 2 -> 1 -> 0, so the closure
  // traverses the braid three times before closing up.
  const int slot_order[3] = {0, 2, 1};
  auto point = [&](double t) -> Vec {
    const double w = 3.0 * t;
    const int pass = std::min(2, static_cast<int>(w));
    const double s = w - pass;
    const Eigen::Vector2d xz = local(slot_order[pass], s);
    const double phi = kTwoPi * w;  // one turn of the closure per braid pass
    Vec p(3);
    p << (R + xz.x()) * std::cos(phi), (R + xz.x()) * std::sin(phi), xz.y();
    return p;
  };
  return sampled_closed_form(3, 60, point);
}

CurveSet unlink_3d(int c, double separation) {
  if (c < 1) throw ValidationError("unlink needs at least one component");
  CurveSet set;
  const PeriodicCurve base = circle_2d().embedded_in_3d();
  for (int i = 0; i < c; ++i) {
    Vec offset = Vec::Zero(3);
    offset[0] = i * separation;
    set.curves.push_back(base.translated(offset));
  }
  return set;
}

CurveSet hopf_3d() {
  CurveSet set;
  set.curves.push_back(circle_2d().embedded_in_3d());
  // Second circle in the y = 0 plane through the first one's center region.
  std::map<int, Eigen::VectorXcd> modes;
  Eigen::VectorXcd c0(3), c1(3);
  c0 << 1.0, 0.0, 0.0;
  c1 << std::complex<double>(0.5, 0.0), std::complex<double>(0.0, 0.0),
      std::complex<double>(0.0, -0.5);
  modes[0] = c0;
  modes[1] = c1;
  set.curves.push_back(PeriodicCurve::from_modes(3, modes));
  return set;
}

}  // namespace

CurveSet catalog(const std::string& name, const CatalogParams& params) {
  CurveSet set;
  if (name == "circle") {
    PeriodicCurve c = circle_2d();
    set.curves.push_back(params.dimension == 3 ? c.embedded_in_3d() : c);
  } else if (name == "unknot") {
    set.curves.push_back(circle_2d().embedded_in_3d());
  } else if (name == "epicycloid") {
    set.curves.push_back(epicycloid_2d());
  } else if (name == "arc") {
    set.curves.push_back(arc_2d(params.l));
  } else if (name == "segment") {
    set.curves.push_back(segment_2d());
  } else if (name == "lemniscate") {
    PeriodicCurve c = lemniscate_2d();
    set.curves.push_back(params.dimension == 3 ? c.embedded_in_3d() : c);
  } else if (name == "trefoil") {
    set.curves.push_back(trefoil_3d());
  } else if (name == "torus") {
    set.curves.push_back(torus_knot_3d(params.p, params.q));
  } else if (name == "figure8") {
    set.curves.push_back(figure8_knot_3d());
  } else if (name == "granny") {
    set.curves.push_back(granny_3d());
  } else if (name == "unlink") {
    set = unlink_3d(params.c, params.separation);
  } else if (name == "hopf") {
    set = hopf_3d();
  } else {
    throw ValidationError("unknown catalog curve '" + name + "'");
  }
  return set;
}

PeriodicCurve catalog_curve(const std::string& name, const CatalogParams& params) {
  CurveSet set = catalog(name, params);
  if (set.component_count() != 1)
    throw ValidationError("catalog entry '" + name + "' is a multi-curve set");
  return set.curves.front();
}

}  // namespace keptop
