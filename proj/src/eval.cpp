#include "lof/eval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include <json.hpp>

namespace lof {

bool is_correct_match(const LineSegment& tracked, const LineSegment& truth,
                      double threshold, double min_overlap) {
  const LinearLine ref = line_from_endpoints(truth);
  if (std::abs(ref.signed_distance(tracked.s)) >= threshold) return false;
  if (std::abs(ref.signed_distance(tracked.e)) >= threshold) return false;

  const Vec2 dir = truth.direction();
  const double len_truth = truth.length();
  double t0 = dir.dot(tracked.s - truth.s);
  double t1 = dir.dot(tracked.e - truth.s);
  if (t0 > t1) std::swap(t0, t1);
  const double overlap = std::min(t1, len_truth) - std::max(t0, 0.0);
  const double len_tracked = t1 - t0;
  return overlap >= min_overlap * std::min(len_tracked, len_truth);
}

namespace {

const LineTruth* find_truth(const GroundTruth& gt, int frame, int64_t id) {
  for (const LineTruth& lt : gt.frames[static_cast<size_t>(frame)].lines)
    if (lt.id == id) return &lt;
  return nullptr;
}

bool record_correct(const TrackRecord& rec, const GroundTruth& gt,
                    double threshold, double min_overlap) {
  if (rec.seed_id < 0) return false;
  const LineTruth* lt = find_truth(gt, rec.frame, rec.seed_id);
  if (!lt) return false;
  return is_correct_match(LineSegment(rec.s, rec.e), lt->segment(), threshold,
                          min_overlap);
}

}  // namespace

MetricsReport compute_metrics(const std::vector<TrackRecord>& report,
                              const GroundTruth& gt, double threshold,
                              double min_overlap) {
  int max_frame = -1;
  for (const TrackRecord& rec : report) {
    if (rec.frame < 0 ||
        rec.frame >= static_cast<int>(gt.frames.size()))
      throw FrameMismatch("report frame " + std::to_string(rec.frame) +
                          " outside ground truth of " +
                          std::to_string(gt.frames.size()) + " frames");
    max_frame = std::max(max_frame, rec.frame);
  }

  // Group live observations per track in frame order.
  std::map<int64_t, std::vector<const TrackRecord*>> by_track;
  for (const TrackRecord& rec : report)
    if (rec.live) by_track[rec.track_id].push_back(&rec);
  for (auto& [id, rows] : by_track)
    std::sort(rows.begin(), rows.end(),
              [](const TrackRecord* a, const TrackRecord* b) {
                return a->frame < b->frame;
              });

  MetricsReport out;
  out.n_frames = max_frame + 1;
  out.n_tracks = static_cast<int>(by_track.size());

  // Matches: per consecutive frame pair, tracks observed at both ends.
  int64_t total_matches = 0;
  int64_t total_correct = 0;
  for (const auto& [id, rows] : by_track) {
    for (size_t i = 1; i < rows.size(); ++i) {
      if (rows[i]->frame != rows[i - 1]->frame + 1) continue;
      ++total_matches;
      if (record_correct(*rows[i], gt, threshold, min_overlap))
        ++total_correct;
    }
  }
  if (max_frame >= 1)
    out.n_matches = static_cast<double>(total_matches) / max_frame;
  out.accuracy_defined = total_matches > 0;
  out.accuracy = out.accuracy_defined
                     ? static_cast<double>(total_correct) / total_matches
                     : 0.0;

  double length_sum = 0.0;
  for (const auto& [id, rows] : by_track) {
    TrackDetail det;
    det.track_id = id;
    det.seed_id = rows.front()->seed_id;
    det.birth_frame = rows.front()->frame;
    det.n_frames = static_cast<int>(rows.size());
    for (const TrackRecord* rec : rows) {
      if (!record_correct(*rec, gt, threshold, min_overlap)) break;
      ++det.correct_prefix;
    }
    length_sum += det.correct_prefix;
    out.tracks.push_back(det);
  }
  if (out.n_tracks > 0) out.tracking_length = length_sum / out.n_tracks;
  return out;
}

std::string metrics_to_json(const MetricsReport& m) {
  nlohmann::json j;
  j["n_matches"] = m.n_matches;
  j["accuracy"] = m.accuracy;
  j["accuracy_defined"] = m.accuracy_defined;
  j["tracking_length"] = m.tracking_length;
  j["n_tracks"] = m.n_tracks;
  j["n_frames"] = m.n_frames;
  nlohmann::json rows = nlohmann::json::array();
  for (const TrackDetail& t : m.tracks) {
    rows.push_back({{"track_id", t.track_id},
                    {"seed_id", t.seed_id},
                    {"birth_frame", t.birth_frame},
                    {"n_frames", t.n_frames},
                    {"correct_prefix", t.correct_prefix}});
  }
  j["tracks"] = rows;
  return j.dump();
}

std::string metrics_table(const MetricsReport& m) {
  std::ostringstream os;
  os << "metric            value\n";
  os << "n_matches         " << m.n_matches << "\n";
  os << "accuracy          " << m.accuracy
     << (m.accuracy_defined ? "" : "  (no matches)") << "\n";
  os << "tracking_length   " << m.tracking_length << "\n";
  os << "n_tracks          " << m.n_tracks << "\n";
  os << "n_frames          " << m.n_frames << "\n";
  return os.str();
}

std::string metrics_csv(const MetricsReport& m) {
  std::ostringstream os;
  os << "track_id,seed_id,birth_frame,n_frames,correct_prefix\n";
  for (const TrackDetail& t : m.tracks)
    os << t.track_id << "," << t.seed_id << "," << t.birth_frame << ","
       << t.n_frames << "," << t.correct_prefix << "\n";
  return os.str();
}

}  // namespace lof
