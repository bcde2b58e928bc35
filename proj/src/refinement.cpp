#include "lof/refinement.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace lof {

double gradient_sum(const LinearLine& line, const std::vector<Vec2>& points,
                    const Image& img_c) {
  const Vec2 n(line.a(), line.b());
  double sum = 0.0;
  size_t skipped = 0;
  for (const Vec2& p : points) {
    const Vec2 hi = p + n;
    const Vec2 lo = p - n;
    if (!img_c.contains(hi) || !img_c.contains(lo)) {
      ++skipped;
      continue;
    }
    sum += std::abs(sample_bilinear(img_c, hi) - sample_bilinear(img_c, lo)) / 2.0;
  }
  if (!points.empty() && skipped == points.size())
    throw OutOfBounds("every probe of the candidate line left the image");
  return sum;
}

namespace {

// Summed absolute intensity difference between the templates around pos_l in
// img_l and pos_c in img_c. Infinity when either window leaves its image.
double anchor_error(const Image& img_l, const Vec2& pos_l, const Image& img_c,
                    const Vec2& pos_c, int half) {
  const double margin = half + 1.0;
  if (!img_l.contains(pos_l, margin) || !img_c.contains(pos_c, margin))
    return std::numeric_limits<double>::infinity();
  double err = 0.0;
  for (int hv = -half; hv <= half; ++hv)
    for (int hu = -half; hu <= half; ++hu) {
      const Vec2 h(hu, hv);
      err += std::abs(sample_bilinear(img_l, pos_l + h) -
                      sample_bilinear(img_c, pos_c + h));
    }
  return err;
}

}  // namespace

RefineResult refine_orientation_position(const AlignResult& aligned,
                                         double predicted_alpha,
                                         const Image& img_l,
                                         const Image& img_c,
                                         const RefineConfig& cfg) {
  std::vector<const SamplePoint*> tracked;
  for (const SamplePoint& sp : aligned.points_c)
    if (sp.status == PointStatus::Converged) tracked.push_back(&sp);
  if (tracked.size() < 3)
    throw TooFewPoints("refinement needs 3 tracked points, got " +
                       std::to_string(tracked.size()));

  const SamplePoint* anchor = tracked.front();
  double best_err = std::numeric_limits<double>::infinity();
  for (const SamplePoint* sp : tracked) {
    const double err = anchor_error(img_l, sp->pos_l, img_c, sp->pos_c,
                                    cfg.photometric_window);
    if (err < best_err) {
      best_err = err;
      anchor = sp;
    }
  }
  const Vec2 pivot = anchor->pos_c;

  // Position snap: keep the orientation, pass through the anchor.
  const double beta = aligned.line_c.beta;
  const NormalLine snapped = NormalLine::canonical(
      beta, std::cos(beta) * pivot.x() + std::sin(beta) * pivot.y());
  std::vector<Vec2> base_points;
  base_points.reserve(tracked.size());
  for (const SamplePoint* sp : tracked)
    base_points.push_back(project_point_to_line(sp->pos_c, snapped));

  const double gap_deg =
      rad_to_deg(angle_dist_half(snapped.alpha(), predicted_alpha));
  const int n_steps = std::min(
      cfg.rotation_cap,
      static_cast<int>(std::ceil(cfg.steps_per_degree * gap_deg)));

  std::vector<double> candidates{0.0};
  if (n_steps >= 1) {
    const int n = std::max(n_steps, 2);
    for (int i = 0; i < n; ++i)
      candidates.push_back(
          deg_to_rad(-gap_deg + 2.0 * gap_deg * i / (n - 1)));
  }

  RefineResult best;
  double best_sum = -std::numeric_limits<double>::infinity();
  double best_rot = std::numeric_limits<double>::infinity();
  for (double rot : candidates) {
    const NormalLine cand_line = NormalLine::canonical(
        snapped.beta + rot, std::cos(snapped.beta + rot) * pivot.x() +
                                std::sin(snapped.beta + rot) * pivot.y());
    const Mat2 r = Eigen::Rotation2Dd(rot).toRotationMatrix();
    std::vector<Vec2> cand_points;
    cand_points.reserve(base_points.size());
    for (const Vec2& p : base_points)
      cand_points.push_back(pivot + r * (p - pivot));
    double sum;
    try {
      sum = gradient_sum(normal_to_linear(cand_line), cand_points, img_c);
    } catch (const OutOfBounds&) {
      continue;
    }
    if (sum > best_sum ||
        (sum == best_sum && std::abs(rot) < std::abs(best_rot))) {
      best_sum = sum;
      best_rot = rot;
      best.line = cand_line;
      best.points = std::move(cand_points);
    }
  }
  if (best.points.empty()) {
    // Every candidate's probes left the image; keep the snapped state.
    best.line = snapped;
    best.points = std::move(base_points);
  }
  return best;
}

LineSegment extend_endpoints(const LinearLine& line_c,
                             const std::vector<Vec2>& tracked,
                             const Image& img_c, const RefineConfig& cfg,
                             const SamplingConfig& sampling) {
  if (tracked.size() < 2)
    throw TooFewPoints("endpoint extension needs 2 tracked points, got " +
                       std::to_string(tracked.size()));

  std::vector<Vec2> proj;
  proj.reserve(tracked.size());
  for (const Vec2& p : tracked) proj.push_back(project_point_to_line(p, line_c));

  size_t ia = 0, ib = 1;
  double best_d2 = -1.0;
  for (size_t i = 0; i < proj.size(); ++i)
    for (size_t j = i + 1; j < proj.size(); ++j) {
      const double d2 = (proj[i] - proj[j]).squaredNorm();
      if (d2 > best_d2) {
        best_d2 = d2;
        ia = i;
        ib = j;
      }
    }

  const double alpha = line_frame(line_c).alpha;
  auto march = [&](Vec2 endpoint, const Vec2& dir) {
    double travelled = 0.0;
    while (travelled + cfg.extension_step <= cfg.extension_max) {
      const Vec2 cand = endpoint + cfg.extension_step * dir;
      if (!img_c.contains(cand, 1.0)) break;
      if (!is_appropriate(cand, alpha, img_c, sampling)) break;
      endpoint = cand;
      travelled += cfg.extension_step;
    }
    return endpoint;
  };

  Vec2 ea = proj[ia];
  Vec2 eb = proj[ib];
  const Vec2 dir = (ea - eb).norm() > 1e-12 ? Vec2((ea - eb).normalized())
                                            : Vec2(-line_c.b(), line_c.a());
  ea = march(ea, dir);
  eb = march(eb, -dir);
  return LineSegment(ea, eb);
}

}  // namespace lof
