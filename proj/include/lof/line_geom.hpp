#pragma once

#include "lof/errors.hpp"
#include "lof/types.hpp"

namespace lof {

/// Finite line segment between two image points. Construction rejects
/// segments shorter than 2 px.
struct LineSegment {
  Vec2 s;
  Vec2 e;

  LineSegment(const Vec2& s_, const Vec2& e_);

  double length() const { return (e - s).norm(); }
  Vec2 direction() const { return (e - s).normalized(); }
  Vec2 midpoint() const { return 0.5 * (s + e); }
};

/// Infinite line a*u + b*v + c = 0, stored with a^2 + b^2 = 1 and c <= 0.
/// When c = 0 the sign is fixed by b > 0, or a > 0 if b = 0. With this
/// normalization (a, b) is the unit normal pointing from the origin toward
/// the line and -c is its distance from the origin.
class LinearLine {
 public:
  LinearLine(double a, double b, double c);

  double a() const { return a_; }
  double b() const { return b_; }
  double c() const { return c_; }

  /// Distance of p from the line, signed along the stored normal.
  double signed_distance(const Vec2& p) const {
    return a_ * p.x() + b_ * p.y() + c_;
  }

 private:
  double a_, b_, c_;
};

/// Normal form cos(beta)*u + sin(beta)*v = d with d >= 0. beta spans
/// [0, 2*pi): once d is pinned non-negative, lines whose origin-facing normal
/// has a negative v component need beta above pi. Lines through the origin
/// (d = 0) use beta in [0, pi).
struct NormalLine {
  double beta = 0.0;
  double d = 0.0;

  /// Wraps beta into range and flips (beta, d) so d >= 0.
  static NormalLine canonical(double beta, double d);

  Vec2 normal() const { return Vec2(std::cos(beta), std::sin(beta)); }
  /// Direction angle of the line in [0, pi).
  double alpha() const { return wrap_angle_half(beta + 0.5 * kPi); }
  double signed_distance(const Vec2& p) const {
    return std::cos(beta) * p.x() + std::sin(beta) * p.y() - d;
  }
};

/// Per-line sampling frame: direction angle alpha in [0, pi) and the unit
/// normal.
struct LineFrame {
  double alpha = 0.0;
  Vec2 normal = Vec2(0.0, 1.0);
};

NormalLine linear_to_normal(const LinearLine& l);
LinearLine normal_to_linear(const NormalLine& u);

LineFrame line_frame(const LinearLine& l);
inline LineFrame line_frame(const NormalLine& u) {
  return line_frame(normal_to_linear(u));
}

/// Line through the segment endpoints (homogeneous cross product).
LinearLine line_from_endpoints(const LineSegment& seg);

/// Closest point on l to p. The output satisfies the line equation exactly up
/// to roundoff.
Vec2 project_point_to_line(const Vec2& p, const LinearLine& l);
inline Vec2 project_point_to_line(const Vec2& p, const NormalLine& u) {
  return project_point_to_line(p, normal_to_linear(u));
}

/// Pinhole intrinsics (zero skew).
struct Intrinsics {
  double fx = 1.0, fy = 1.0, cx = 0.0, cy = 0.0;

  Mat3 matrix() const;
  Mat3 inverse() const;
};

/// Plane-free image-to-image map valid under pure camera rotation (or as a
/// general prior supplied from outside). Requires h33 != 0 and invertibility.
class Homography {
 public:
  explicit Homography(const Mat3& h);
  static Homography identity() { return Homography(Mat3::Identity()); }

  const Mat3& matrix() const { return h_; }
  Mat3 inverse() const { return h_.inverse(); }

  /// Upper-left 2x2 of H / h33: the local affine part used to warp template
  /// windows.
  Mat2 affine() const { return (h_ / h_(2, 2)).topLeftCorner<2, 2>(); }

 private:
  Mat3 h_;
};

/// H = K * R * K^-1. Throws NotARotation unless R is orthonormal with
/// determinant 1 (tolerance 1e-6).
Homography homography_from_rotation(const Mat3& r, const Intrinsics& k);

Vec2 transform_point(const Homography& h, const Vec2& p);

struct Prediction {
  Vec2 point;
  LinearLine line;
};

/// Maps a point by H and a line by H^-T, renormalizing the line. The mapped
/// point stays incident to the mapped line.
Prediction predict(const Homography& h, const Vec2& p, const LinearLine& l);

}  // namespace lof
