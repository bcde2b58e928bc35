#pragma once

#include <vector>

#include "lof/alignment.hpp"
#include "lof/image.hpp"
#include "lof/line_geom.hpp"
#include "lof/sampling.hpp"

namespace lof {

struct RefineConfig {
  int rotation_cap = 20;           // max rotation candidates
  double steps_per_degree = 20.0;  // candidate density over the sweep range
  double extension_step = 1.0;     // px per endpoint march step
  double extension_max = 200.0;    // px cap per endpoint
  int photometric_window = 3;      // half-width of the anchor error window
};

/// Mean-free edge-strength score of a candidate line: sum over points of
/// |I(p + n) - I(p - n)| / 2 with n the line's unit normal. Points whose
/// probes leave the image are skipped; throws OutOfBounds only when every
/// point skips.
double gradient_sum(const LinearLine& line, const std::vector<Vec2>& points,
                    const Image& img_c);

struct RefineResult {
  NormalLine line{0.0, 0.0};
  std::vector<Vec2> points;  // tracked points reprojected onto `line`
};

/// Snaps the tracked line through the anchor point with the smallest
/// photometric error, then sweeps rotations about that anchor over the
/// angular gap to the predicted direction, keeping the candidate with the
/// strongest gradient_sum. Ties go to the smallest rotation.
RefineResult refine_orientation_position(const AlignResult& aligned,
                                         double predicted_alpha,
                                         const Image& img_l,
                                         const Image& img_c,
                                         const RefineConfig& cfg);

/// Rebuilds the segment extent: endpoints start at the two most distant
/// tracked points projected on the line, then march outward while the
/// marched pixel stays gradient-valid for the line, inside the image with a
/// 1 px margin, and within extension_max of the start.
LineSegment extend_endpoints(const LinearLine& line_c,
                             const std::vector<Vec2>& tracked,
                             const Image& img_c, const RefineConfig& cfg,
                             const SamplingConfig& sampling);

}  // namespace lof
