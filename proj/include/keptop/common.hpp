#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace keptop {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;

constexpr double kTwoPi = 6.283185307179586476925286766559;

// Thrown when an evaluation hits the singular set (kernel at zero distance).
struct SingularityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Thrown when a query point is too close to a curve for a trustworthy value.
struct ProximityError : std::runtime_error {
  ProximityError(const std::string& msg, int curve_index_ = -1)
      : std::runtime_error(msg), curve_index(curve_index_) {}
  int curve_index;
};

// Bad input: violated precondition, malformed scenario field, unknown name.
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Axis-aligned box in R^n.
struct Box {
  Vec lo, hi;

  int dimension() const { return static_cast<int>(lo.size()); }
  Vec widths() const { return hi - lo; }
  double diameter() const { return (hi - lo).norm(); }
  bool contains(const Vec& x) const {
    for (int i = 0; i < x.size(); ++i)
      if (x[i] < lo[i] || x[i] > hi[i]) return false;
    return true;
  }
  Box expanded(double margin) const {
    Box b{lo, hi};
    b.lo.array() -= margin;
    b.hi.array() += margin;
    return b;
  }
};

// Low-discrepancy points for deterministic multistart seeding.
inline double halton(std::uint64_t index, std::uint32_t base) {
  double f = 1.0, r = 0.0;
  while (index > 0) {
    f /= base;
    r += f * static_cast<double>(index % base);
    index /= base;
  }
  return r;
}

inline Vec halton_point(std::uint64_t index, const Box& box) {
  static const std::uint32_t primes[] = {2, 3, 5, 7, 11, 13};
  const int n = box.dimension();
  Vec x(n);
  for (int i = 0; i < n; ++i)
    x[i] = box.lo[i] + halton(index, primes[i]) * (box.hi[i] - box.lo[i]);
  return x;
}

// Platform-stable uniform doubles in [0,1) from a splitmix64 stream.
// std::uniform_real_distribution is implementation-defined, so reports built
// from the same seed would not be byte-identical across standard libraries.
class UniformRng {
 public:
  explicit UniformRng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }
  double uniform(double a, double b) { return a + (b - a) * next_double(); }

 private:
  std::uint64_t state_;
};

}  // namespace keptop
