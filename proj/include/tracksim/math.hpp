#pragma once

#include <cmath>

namespace tracksim {

inline constexpr double kPi = 3.14159265358979323846;

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  constexpr Vec2() = default;
  constexpr Vec2(double x_, double y_) : x(x_), y(y_) {}

  Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
  Vec2 operator-() const { return {-x, -y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  Vec2 operator/(double s) const { return {x / s, y / s}; }
  Vec2& operator+=(const Vec2& o) {
    x += o.x;
    y += o.y;
    return *this;
  }
  Vec2& operator-=(const Vec2& o) {
    x -= o.x;
    y -= o.y;
    return *this;
  }
  Vec2& operator*=(double s) {
    x *= s;
    y *= s;
    return *this;
  }
  bool operator==(const Vec2& o) const { return x == o.x && y == o.y; }

  double length_sq() const { return x * x + y * y; }
  double length() const { return std::sqrt(x * x + y * y); }
};

inline Vec2 operator*(double s, const Vec2& v) { return {s * v.x, s * v.y}; }

inline double dot(const Vec2& a, const Vec2& b) { return a.x * b.x + a.y * b.y; }

// z-component of the 3-D cross product of in-plane vectors.
inline double cross(const Vec2& a, const Vec2& b) { return a.x * b.y - a.y * b.x; }

// omega x r for scalar angular velocity.
inline Vec2 cross(double w, const Vec2& r) { return {-w * r.y, w * r.x}; }

// 90 degree counter-clockwise rotation.
inline Vec2 perp(const Vec2& v) { return {-v.y, v.x}; }

// 2x2 rotation, kept as (cos, sin) so repeated use avoids trig calls.
struct Rot2 {
  double c = 1.0;
  double s = 0.0;

  Rot2() = default;
  explicit Rot2(double angle) : c(std::cos(angle)), s(std::sin(angle)) {}

  Vec2 apply(const Vec2& v) const { return {c * v.x - s * v.y, s * v.x + c * v.y}; }
  Vec2 apply_inv(const Vec2& v) const { return {c * v.x + s * v.y, -s * v.x + c * v.y}; }
};

// Symmetric 2x2 system solve for constraint blocks.
struct Mat2 {
  double a11 = 0, a12 = 0, a21 = 0, a22 = 0;

  Vec2 solve(const Vec2& b) const {
    double det = a11 * a22 - a12 * a21;
    if (det != 0.0) det = 1.0 / det;
    return {det * (a22 * b.x - a12 * b.y), det * (a11 * b.y - a21 * b.x)};
  }
};

// Wraps into (-pi, pi]. Identity for values already in range.
inline double wrap_angle(double a) {
  if (a > -kPi && a <= kPi) return a;
  a = std::fmod(a + kPi, 2.0 * kPi);
  if (a <= 0.0) a += 2.0 * kPi;
  return a - kPi;
}

// Shortest signed distance from angle b to angle a.
inline double angle_diff(double a, double b) { return wrap_angle(a - b); }

inline double clamp(double v, double lo, double hi) { return v < lo ? lo : (v > hi ? hi : v); }

// Cubic ease in [0,1], zero slope at both ends.
inline double smoothstep01(double t) {
  t = clamp(t, 0.0, 1.0);
  return t * t * (3.0 - 2.0 * t);
}

inline bool finite(const Vec2& v) { return std::isfinite(v.x) && std::isfinite(v.y); }

}  // namespace tracksim
