#pragma once

#include <optional>
#include <vector>

#include "lof/image.hpp"
#include "lof/line_geom.hpp"

namespace lof {

enum class PointClass { Corner, Edge, Reject };
enum class PointStatus { Active, Converged, Failed };

/// One tracked sample on a line. pos_l lives in the template frame, pos_c in
/// the frame being tracked into. template_index refers into the level-local
/// template array built during alignment (-1 before any alignment ran).
struct SamplePoint {
  Vec2 pos_l = Vec2::Zero();
  Vec2 pos_c = Vec2::Zero();
  PointClass cls = PointClass::Edge;
  PointStatus status = PointStatus::Active;
  int template_index = -1;
};

struct SamplingConfig {
  double grad_threshold = 5.0;           // minimum gradient magnitude
  double angle_threshold = deg_to_rad(22.5);  // max |alpha - theta| mod pi
  double spacing = 8.0;                  // nominal gap between samples, px
  int min_points = 5;
  int max_points = 30;
  double remediation_step = 1.0;         // px along the line direction
  int remediation_max_steps = 3;         // tries each way
  double corner_lambda_min = 500.0;      // raw-intensity tensor threshold
  double edge_lambda_ratio = 10.0;       // lambda_max / lambda_min for edges
};

/// Evenly spaced positions along the segment, endpoints included. The count
/// is floor(length / spacing) + 1 clamped to [min_points, max_points].
/// Throws SegmentTooShort when the segment cannot carry min_points at 1 px
/// spacing.
std::vector<Vec2> sample_line_points(const LineSegment& seg,
                                     const SamplingConfig& cfg);

/// Gradient-validity test: magnitude above grad_threshold and orientation
/// within angle_threshold of the line direction alpha (compared modulo pi).
bool is_appropriate(const Vec2& p, double alpha, const Image& img,
                    const SamplingConfig& cfg);

/// Slides p along dir (+step, -step, +2*step, ...) looking for the nearest
/// replacement that passes is_appropriate. Offsets that leave the valid
/// gradient domain are skipped. Returns nullopt when every candidate fails.
std::optional<Vec2> remediate_point(const Vec2& p, const Vec2& dir,
                                    double alpha, const Image& img,
                                    const SamplingConfig& cfg);

/// Structure-tensor classification over a fixed 7x7 window: Corner when
/// lambda_min clears corner_lambda_min, else Edge when lambda_max clears it
/// and dominates lambda_min by edge_lambda_ratio, else Reject.
PointClass classify_point(const Vec2& p, const Image& img,
                          const SamplingConfig& cfg);

}  // namespace lof
