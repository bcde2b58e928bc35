#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lof/config.hpp"
#include "lof/eval.hpp"
#include "lof/synth.hpp"
#include "lof/tracker.hpp"

namespace lof {

/// Runs the tracker over an in-memory frame sequence. When `replenish_gt` is
/// set, frame-0 seeds come from its visible segments and lost lines are
/// replaced every frame; otherwise `initial_seeds` starts the run and no
/// replenishment happens. `priors`, when non-empty, supplies one rotation
/// prior per frame transition (size frames-1).
struct TrackingOutputs {
  std::vector<TrackRecord> report;
  std::vector<std::string> diag_jsonl;
};

TrackingOutputs run_tracking(const std::vector<Image>& frames,
                             const std::vector<DetectedSegment>& initial_seeds,
                             const GroundTruth* replenish_gt,
                             const std::vector<RotationPrior>& priors,
                             const RunConfig& cfg, bool dump_diagnostics);

std::string report_to_jsonl(const std::vector<TrackRecord>& report);
std::vector<TrackRecord> parse_report(const std::string& jsonl);
std::vector<TrackRecord> load_report(const std::string& path);

/// frame_0000.pgm, frame_0001.pgm, ... under dir, in index order. Throws
/// IoError when the directory holds no frames.
std::vector<std::string> list_frame_files(const std::string& dir);
std::vector<Image> load_frames(const std::string& dir);

/// Initial seed file: a JSON array of [sx, sy, ex, ey] quadruples.
std::vector<DetectedSegment> load_seed_segments(const std::string& path);

/// Rotation prior file: {"intrinsics": {fx, fy, cx, cy},
/// "rotations": [[9 row-major doubles], ...]} with one rotation per frame
/// transition.
std::vector<RotationPrior> load_rotation_priors(const std::string& path);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace lof
