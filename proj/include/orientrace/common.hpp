#pragma once

// Shared basics: small vector math, SE(2) moving frame, error type,
// and the thread-count plumbing used by the OpenMP kernels.

#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace orientrace {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

using cplx = std::complex<double>;

enum class ErrorCode {
  NotFound,
  FormatError,
  DimError,
  ParamError,
  EmptyMask,
  IllConditioned,
  OutOfBounds,
  SeedError,
  DegenerateSpan,
  TooShort,
  NoSeeds,
  Reject,
  Boundary,
};

struct Error : std::runtime_error {
  ErrorCode code;
  Error(ErrorCode c, const std::string& what) : std::runtime_error(what), code(c) {}
};

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2() = default;
  Vec2(double x_, double y_) : x(x_), y(y_) {}

  Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  Vec2& operator+=(const Vec2& o) { x += o.x; y += o.y; return *this; }
  double dot(const Vec2& o) const { return x * o.x + y * o.y; }
  double cross(const Vec2& o) const { return x * o.y - y * o.x; }
  double norm() const { return std::hypot(x, y); }
};

inline Vec2 operator*(double s, const Vec2& v) { return v * s; }

// Moving frame along an oriented curve: e_xi points along the orientation,
// e_eta is e_xi rotated by +90 degrees.
inline Vec2 frame_xi(double theta) { return {std::cos(theta), std::sin(theta)}; }
inline Vec2 frame_eta(double theta) { return {-std::sin(theta), std::cos(theta)}; }

struct Se2 {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;
};

// Group product (x,R_a)(x',R_b) = (R_a x' + x, R_{a+b}).
inline Se2 se2_mul(const Se2& a, const Se2& b) {
  const double c = std::cos(a.theta), s = std::sin(a.theta);
  return {a.x + c * b.x - s * b.y, a.y + s * b.x + c * b.y, a.theta + b.theta};
}

inline Se2 se2_inv(const Se2& g) {
  const double c = std::cos(g.theta), s = std::sin(g.theta);
  return {-(c * g.x + s * g.y), -(-s * g.x + c * g.y), -g.theta};
}

// Wrap angle to [-pi, pi).
inline double wrap_pi(double a) {
  a = std::fmod(a + kPi, kTwoPi);
  if (a < 0) a += kTwoPi;
  return a - kPi;
}

// Wrap angle to [0, 2*pi).
inline double wrap_two_pi(double a) {
  a = std::fmod(a, kTwoPi);
  if (a < 0) a += kTwoPi;
  return a;
}

// Smallest absolute angular distance on the circle.
inline double circ_dist(double a, double b) { return std::abs(wrap_pi(a - b)); }

// Orientation distance mod pi (undirected lines).
inline double orient_dist(double a, double b) {
  double d = std::fmod(std::abs(a - b), kPi);
  return std::min(d, kPi - d);
}

// Thread count used by the parallel kernels. 0 = library default.
void set_thread_count(int n);
int thread_count();

}  // namespace orientrace
