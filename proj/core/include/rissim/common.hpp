#ifndef RISSIM_COMMON_HPP
#define RISSIM_COMMON_HPP

#include <cmath>
#include <complex>
#include <stdexcept>

namespace rissim {

using cd = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;
inline constexpr double kSpeedOfLight = 299792458.0;  // m/s

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  Vec2& operator+=(const Vec2& o) {
    x += o.x;
    y += o.y;
    return *this;
  }
  double dot(const Vec2& o) const { return x * o.x + y * o.y; }
  double norm() const { return std::sqrt(x * x + y * y); }
  Vec2 normalized() const {
    const double n = norm();
    if (n == 0.0) throw std::domain_error("cannot normalize zero vector");
    return {x / n, y / n};
  }
};

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  Vec3 cross(const Vec3& o) const {
    return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
  }
  double norm() const { return std::sqrt(x * x + y * y + z * z); }
  Vec3 normalized() const {
    const double n = norm();
    if (n == 0.0) throw std::domain_error("cannot normalize zero vector");
    return {x / n, y / n, z / n};
  }
};

inline double distance(const Vec3& a, const Vec3& b) { return (a - b).norm(); }
inline double distance(const Vec2& a, const Vec2& b) { return (a - b).norm(); }

/// Wrap an angle to (-pi, pi].
inline double wrap_angle(double a) {
  a = std::fmod(a + kPi, kTwoPi);
  if (a <= 0.0) a += kTwoPi;
  return a - kPi;
}

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double lin) { return 10.0 * std::log10(lin); }

}  // namespace rissim

#endif  // RISSIM_COMMON_HPP
