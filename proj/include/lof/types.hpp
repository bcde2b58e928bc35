#pragma once

#include <Eigen/Dense>
#include <cmath>

namespace lof {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;

constexpr double kPi = 3.14159265358979323846;

// Reduce an angle to [0, pi). Line directions and gradient orientations are
// only defined modulo pi.
inline double wrap_angle_half(double a) {
  a = std::fmod(a, kPi);
  if (a < 0.0) a += kPi;
  if (a >= kPi) a -= kPi;  // fmod can land exactly on pi
  return a;
}

// Reduce an angle to [0, 2*pi).
inline double wrap_angle_full(double a) {
  a = std::fmod(a, 2.0 * kPi);
  if (a < 0.0) a += 2.0 * kPi;
  if (a >= 2.0 * kPi) a -= 2.0 * kPi;
  return a;
}

// Distance between two orientations compared modulo pi: min(|d|, pi - |d|).
inline double angle_dist_half(double a, double b) {
  double d = std::fabs(wrap_angle_half(a) - wrap_angle_half(b));
  return std::min(d, kPi - d);
}

inline double deg_to_rad(double deg) { return deg * kPi / 180.0; }
inline double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

}  // namespace lof
