#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lof/image.hpp"
#include "lof/line_geom.hpp"

namespace lof {

/// Band-limited value noise: random lattice values blended with a smoothstep,
/// scaled to [-amplitude, amplitude] around `base`. Cell size keeps noise
/// gradients well under the sampling gradient threshold.
struct BackgroundSpec {
  uint64_t seed = 1;
  double amplitude = 15.0;
  double cell = 16.0;
  double base = 128.0;
};

/// Anti-aliased step edge along a segment: +-contrast/2 across the line,
/// blurred with `sigma`, fading out at the ends over `cap_sigma`.
struct SceneLine {
  Vec2 s = Vec2::Zero();
  Vec2 e = Vec2::Zero();
  double contrast = 80.0;
  double sigma = 1.0;
  double cap_sigma = 3.0;
};

struct OccluderRamp {
  double angle_deg = 0.0;  // gradient direction in image frame
  double slope = 0.0;      // intensity per px along that direction
};

struct OccluderStripes {
  double period = 8.0;
  double angle_deg = 0.0;  // stripe normal direction
  double amplitude = 0.0;
};

/// Axis-aligned rectangle drawn on top of the warped scene, moving with its
/// own per-frame velocity in image space. Its fill is a flat intensity plus
/// optional ramp/stripe textures anchored to the rectangle.
struct Occluder {
  double x = 0.0, y = 0.0, w = 0.0, h = 0.0;
  Vec2 velocity = Vec2::Zero();
  double intensity = 200.0;
  std::optional<OccluderRamp> ramp;
  std::optional<OccluderStripes> stripes;

  double x0_at(int frame) const { return x + frame * velocity.x(); }
  double y0_at(int frame) const { return y + frame * velocity.y(); }
};

/// Camera motion model; homography_at(f) maps frame-0 coordinates to frame-f
/// coordinates, identity at f = 0.
struct MotionSpec {
  enum class Type {
    Translation,     // H_f = T(f * velocity)
    Oscillation,     // H_f = T(amplitude * sin(2*pi*f / period))
    Rotation2D,      // in-plane rotation about `center`, oscillating
    CameraRotation,  // H_f = K * R(axis, f * deg_per_frame) * K^-1
    General,         // explicit per-frame homographies
    Compose          // left-to-right product of parts
  };
  Type type = Type::Translation;
  Vec2 velocity = Vec2::Zero();
  Vec2 amplitude = Vec2::Zero();
  double period = 60.0;
  Vec2 center = Vec2::Zero();
  double amplitude_deg = 0.0;
  Intrinsics intrinsics;
  Vec3 axis = Vec3(0.0, 0.0, 1.0);
  double deg_per_frame = 0.0;
  std::vector<Mat3> homographies;
  std::vector<MotionSpec> parts;
};

struct SceneSpec {
  int canvas_w = 640;
  int canvas_h = 480;
  int frames = 1;
  BackgroundSpec background;
  std::vector<SceneLine> lines;
  std::vector<Occluder> occluders;
  MotionSpec motion;
};

SceneSpec parse_scene_spec(const std::string& json_text);
SceneSpec load_scene_spec(const std::string& path);

/// Checks that every line image and every occluder rectangle stays inside the
/// canvas for every frame and that the motion model covers all frames.
/// Throws ParseError naming the offending element.
void validate_spec(const SceneSpec& spec);

Mat3 homography_at(const MotionSpec& motion, int frame);

/// Continuous scene intensity (background + line profiles) at frame-0
/// coordinates, before occluders.
double eval_scene(const SceneSpec& spec, const Vec2& scene_pt);

/// Rasterizes frame `frame`: warps the continuous scene by the frame
/// homography, then composites occluders in image space. Deterministic.
Image render_frame(const SceneSpec& spec, int frame);

struct LineTruth {
  int64_t id = 0;
  Vec2 s = Vec2::Zero();
  Vec2 e = Vec2::Zero();
  double occlusion = 0.0;
  /// Longest unoccluded piece of the segment, when at least 2 px of it is
  /// visible.
  std::optional<LineSegment> visible;

  LineSegment segment() const { return LineSegment(s, e); }
};

struct FrameTruth {
  Mat3 homography = Mat3::Identity();
  std::vector<LineTruth> lines;
};

struct GroundTruth {
  int canvas_w = 0;
  int canvas_h = 0;
  std::vector<FrameTruth> frames;
};

GroundTruth ground_truth(const SceneSpec& spec);

std::string ground_truth_to_json(const GroundTruth& gt);
GroundTruth ground_truth_from_json(const std::string& json_text);
GroundTruth load_ground_truth(const std::string& path);
void save_ground_truth(const GroundTruth& gt, const std::string& path);

}  // namespace lof
