#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "lof/alignment.hpp"
#include "lof/image.hpp"
#include "lof/line_geom.hpp"
#include "lof/pyramid.hpp"
#include "lof/refinement.hpp"
#include "lof/synth.hpp"

namespace lof {

struct TrackObservation {
  int frame = 0;
  LineSegment seg;
};

struct Track {
  int64_t id = 0;
  /// Identity of the detector line this track was seeded from (the synthetic
  /// detector reports ground-truth line ids); -1 when unknown. Lets the
  /// evaluator join tracks to reference lines without geometric matching.
  int64_t seed_id = -1;
  std::vector<TrackObservation> observations;
  enum class Status { Live, Lost };
  Status status = Status::Live;

  int age() const { return static_cast<int>(observations.size()); }
};

struct DetectedSegment {
  LineSegment seg;
  int64_t id = -1;
};

class DetectorInterface {
 public:
  virtual ~DetectorInterface() = default;
  /// Returns candidate segments on `img`. `exclusions` lists segments already
  /// being tracked; the detector may use them to skip covered regions, but
  /// the tracker re-checks overlap regardless.
  virtual std::vector<DetectedSegment> detect(
      const Image& img, const std::vector<LineSegment>& exclusions) = 0;
};

/// Detector backed by synthetic ground truth: reports each reference line's
/// visible portion at the current frame.
class GtReplenishDetector : public DetectorInterface {
 public:
  explicit GtReplenishDetector(GroundTruth gt) : gt_(std::move(gt)) {}
  void set_frame(int frame) { frame_ = frame; }
  std::vector<DetectedSegment> detect(
      const Image& img, const std::vector<LineSegment>& exclusions) override;

 private:
  GroundTruth gt_;
  int frame_ = 0;
};

struct RotationPrior {
  Mat3 rotation = Mat3::Identity();  // camera rotation from previous frame
  Intrinsics intrinsics;
};

struct TrackerConfig {
  AlignConfig align;  // includes the shared SamplingConfig
  RefineConfig refine;
  int target_lines = 50;
  double exclusion_radius = 10.0;
  bool refine_enabled = true;
  bool extend_enabled = true;
  int jobs = 1;
};

/// One report row, serialized as a JSON line by the pipeline.
struct TrackRecord {
  int frame = 0;
  int64_t track_id = 0;
  int64_t seed_id = -1;
  bool live = true;
  Vec2 s = Vec2::Zero();
  Vec2 e = Vec2::Zero();
  int n_points = 0;
  int iterations = 0;
};

using TrackDiagFactory = std::function<DiagnosticsSink(int64_t track_id)>;

/// Minimum separation between two segments (zero when they intersect).
double segment_distance(const LineSegment& a, const LineSegment& b);

class TrackerState {
 public:
  explicit TrackerState(const TrackerConfig& cfg);

  /// Installs the first frame and seeds initial tracks (admission applies the
  /// same longest-first and exclusion policy as replenish).
  void start(const Image& first, const std::vector<DetectedSegment>& seeds);

  /// Advances every live track into img_c, replacing the template frame.
  /// Returns one report row per track that was live going in. Diagnostics,
  /// when requested, are replayed per track in id order after the frame.
  std::vector<TrackRecord> track_frame(
      const Image& img_c, const std::optional<RotationPrior>& prior,
      const TrackDiagFactory& diag_factory = nullptr);

  /// Tops the live set back up to target_lines from the detector,
  /// longest-first, skipping candidates within exclusion_radius of a live
  /// line. Call after track_frame.
  void replenish(DetectorInterface& detector, const Image& img_c);

  const std::vector<Track>& tracks() const { return tracks_; }
  int frame() const { return frame_; }
  int live_count() const;

 private:
  void admit(const std::vector<DetectedSegment>& candidates, int frame);

  TrackerConfig cfg_;
  std::vector<Track> tracks_;
  std::optional<Image> last_image_;
  std::optional<Pyramid> last_pyramid_;
  int frame_ = -1;
  int64_t next_id_ = 0;
};

}  // namespace lof
