#pragma once

#include <string>
#include <vector>

#include "lof/line_geom.hpp"
#include "lof/synth.hpp"
#include "lof/tracker.hpp"

namespace lof {

/// Correctness rule for one tracked segment against its reference: both
/// tracked endpoints within `threshold` perpendicular distance of the
/// reference's infinite line, and the tracked segment's projection onto that
/// line overlapping the reference extent by at least `min_overlap` of the
/// shorter of the two lengths.
bool is_correct_match(const LineSegment& tracked, const LineSegment& truth,
                      double threshold, double min_overlap = 0.5);

struct TrackDetail {
  int64_t track_id = 0;
  int64_t seed_id = -1;
  int birth_frame = 0;
  int n_frames = 0;        // observations recorded
  int correct_prefix = 0;  // tracking length: correct frames from birth
};

struct MetricsReport {
  double n_matches = 0.0;        // mean per frame pair
  double accuracy = 0.0;         // correct / matched, 0 when undefined
  bool accuracy_defined = false;
  double tracking_length = 0.0;  // mean correct prefix over tracks
  int n_tracks = 0;
  int n_frames = 0;
  std::vector<TrackDetail> tracks;
};

/// Aggregates a track report against ground truth. Rows are joined to
/// reference lines by seed_id. Throws FrameMismatch when the report uses a
/// frame the ground truth does not cover.
MetricsReport compute_metrics(const std::vector<TrackRecord>& report,
                              const GroundTruth& gt, double threshold,
                              double min_overlap = 0.5);

std::string metrics_to_json(const MetricsReport& m);
std::string metrics_table(const MetricsReport& m);
std::string metrics_csv(const MetricsReport& m);

}  // namespace lof
