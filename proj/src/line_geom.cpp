#include "lof/line_geom.hpp"

#include <cmath>

namespace lof {

LineSegment::LineSegment(const Vec2& s_, const Vec2& e_) : s(s_), e(e_) {
  if ((e - s).norm() < 2.0)
    throw DegenerateSegment("segment endpoints closer than 2 px");
}

LinearLine::LinearLine(double a, double b, double c) {
  const double n = std::hypot(a, b);
  if (n < 1e-12) throw Error("line coefficients (a, b) are both zero");
  a_ = a / n;
  b_ = b / n;
  c_ = c / n;
  bool flip = c_ > 0.0;
  if (c_ == 0.0) flip = b_ < 0.0 || (b_ == 0.0 && a_ < 0.0);
  if (flip) {
    a_ = -a_;
    b_ = -b_;
    c_ = -c_;
  }
}

NormalLine NormalLine::canonical(double beta, double d) {
  if (d < 0.0) {
    beta += kPi;
    d = -d;
  }
  NormalLine u;
  u.beta = d == 0.0 ? wrap_angle_half(beta) : wrap_angle_full(beta);
  u.d = d;
  return u;
}

NormalLine linear_to_normal(const LinearLine& l) {
  return NormalLine::canonical(std::atan2(l.b(), l.a()), -l.c());
}

LinearLine normal_to_linear(const NormalLine& u) {
  return LinearLine(std::cos(u.beta), std::sin(u.beta), -u.d);
}

LineFrame line_frame(const LinearLine& l) {
  LineFrame f;
  f.alpha = wrap_angle_half(std::atan2(-l.a(), l.b()));
  f.normal = Vec2(l.a(), l.b());
  return f;
}

LinearLine line_from_endpoints(const LineSegment& seg) {
  // Cross product of the homogeneous endpoints.
  const double a = seg.s.y() - seg.e.y();
  const double b = seg.e.x() - seg.s.x();
  const double c = seg.s.x() * seg.e.y() - seg.s.y() * seg.e.x();
  return LinearLine(a, b, c);
}

Vec2 project_point_to_line(const Vec2& p, const LinearLine& l) {
  const double dist = l.signed_distance(p);
  return p - dist * Vec2(l.a(), l.b());
}

Mat3 Intrinsics::matrix() const {
  Mat3 k = Mat3::Identity();
  k(0, 0) = fx;
  k(1, 1) = fy;
  k(0, 2) = cx;
  k(1, 2) = cy;
  return k;
}

Mat3 Intrinsics::inverse() const {
  Mat3 k = Mat3::Identity();
  k(0, 0) = 1.0 / fx;
  k(1, 1) = 1.0 / fy;
  k(0, 2) = -cx / fx;
  k(1, 2) = -cy / fy;
  return k;
}

Homography::Homography(const Mat3& h) : h_(h) {
  const double scale = h_.cwiseAbs().maxCoeff();
  if (scale <= 0.0) throw Error("homography is the zero matrix");
  if (std::fabs(h_(2, 2)) < 1e-12 * scale)
    throw Error("homography has (near) zero h33");
  if (std::fabs(h_.determinant()) < 1e-12 * scale * scale * scale)
    throw Error("homography is (near) singular");
}

Homography homography_from_rotation(const Mat3& r, const Intrinsics& k) {
  const double ortho = (r.transpose() * r - Mat3::Identity())
                           .cwiseAbs()
                           .maxCoeff();
  if (ortho > 1e-6 || std::fabs(r.determinant() - 1.0) > 1e-6)
    throw NotARotation("matrix is not a rotation (orthogonality error " +
                       std::to_string(ortho) + ")");
  return Homography(k.matrix() * r * k.inverse());
}

Vec2 transform_point(const Homography& h, const Vec2& p) {
  const Vec3 q = h.matrix() * Vec3(p.x(), p.y(), 1.0);
  const double lim = 1e-12 * std::max({1.0, std::fabs(q.x()),
                                       std::fabs(q.y())});
  if (std::fabs(q.z()) < lim)
    throw PointAtInfinity("point maps to infinity under homography");
  return Vec2(q.x() / q.z(), q.y() / q.z());
}

Prediction predict(const Homography& h, const Vec2& p, const LinearLine& l) {
  const Vec3 lc = h.inverse().transpose() * Vec3(l.a(), l.b(), l.c());
  return Prediction{transform_point(h, p), LinearLine(lc.x(), lc.y(), lc.z())};
}

}  // namespace lof
