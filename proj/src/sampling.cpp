#include "lof/sampling.hpp"

#include <cmath>

namespace lof {

std::vector<Vec2> sample_line_points(const LineSegment& seg,
                                     const SamplingConfig& cfg) {
  const double len = seg.length();
  if (len < (cfg.min_points - 1) * 1.0)
    throw SegmentTooShort("segment of length " + std::to_string(len) +
                          " cannot carry " + std::to_string(cfg.min_points) +
                          " samples");
  int n = static_cast<int>(std::floor(len / cfg.spacing)) + 1;
  if (n < cfg.min_points) n = cfg.min_points;
  if (n > cfg.max_points) n = cfg.max_points;

  const Vec2 dir = seg.direction();
  std::vector<Vec2> pts;
  pts.reserve(static_cast<size_t>(n));
  const double step = len / (n - 1);
  for (int i = 0; i < n; ++i) pts.push_back(seg.s + (i * step) * dir);
  return pts;
}

bool is_appropriate(const Vec2& p, double alpha, const Image& img,
                    const SamplingConfig& cfg) {
  const GradientInfo g = gradient_at(img, p);
  return g.magnitude > cfg.grad_threshold &&
         angle_dist_half(alpha, g.angle) < cfg.angle_threshold;
}

std::optional<Vec2> remediate_point(const Vec2& p, const Vec2& dir,
                                    double alpha, const Image& img,
                                    const SamplingConfig& cfg) {
  for (int k = 1; k <= cfg.remediation_max_steps; ++k) {
    for (const double sign : {1.0, -1.0}) {
      const Vec2 cand = p + sign * k * cfg.remediation_step * dir;
      if (!img.contains(cand, 1.0)) continue;
      if (is_appropriate(cand, alpha, img, cfg)) return cand;
    }
  }
  return std::nullopt;
}

PointClass classify_point(const Vec2& p, const Image& img,
                          const SamplingConfig& cfg) {
  constexpr int kClassifyHalfWindow = 3;  // 7x7
  const StructureTensor t = structure_tensor(img, p, kClassifyHalfWindow);
  if (t.lambda_min >= cfg.corner_lambda_min) return PointClass::Corner;
  const double lo = std::max(t.lambda_min, 1e-12);
  if (t.lambda_max >= cfg.corner_lambda_min &&
      t.lambda_max / lo >= cfg.edge_lambda_ratio)
    return PointClass::Edge;
  return PointClass::Reject;
}

}  // namespace lof
