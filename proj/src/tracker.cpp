#include "lof/tracker.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

namespace lof {

std::vector<DetectedSegment> GtReplenishDetector::detect(
    const Image& img, const std::vector<LineSegment>& exclusions) {
  (void)img;
  (void)exclusions;
  std::vector<DetectedSegment> out;
  if (frame_ < 0 || frame_ >= static_cast<int>(gt_.frames.size()))
    return out;
  for (const LineTruth& lt : gt_.frames[static_cast<size_t>(frame_)].lines) {
    if (!lt.visible) continue;
    out.push_back({*lt.visible, lt.id});
  }
  return out;
}

namespace {

double point_segment_distance(const Vec2& p, const LineSegment& seg) {
  const Vec2 d = seg.e - seg.s;
  const double t =
      std::clamp((p - seg.s).dot(d) / d.squaredNorm(), 0.0, 1.0);
  return (p - (seg.s + t * d)).norm();
}

double cross2(const Vec2& a, const Vec2& b) {
  return a.x() * b.y() - a.y() * b.x();
}

bool segments_intersect(const LineSegment& a, const LineSegment& b) {
  const double d1 = cross2(a.e - a.s, b.s - a.s);
  const double d2 = cross2(a.e - a.s, b.e - a.s);
  const double d3 = cross2(b.e - b.s, a.s - b.s);
  const double d4 = cross2(b.e - b.s, a.e - b.s);
  return ((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0));
}

}  // namespace

double segment_distance(const LineSegment& a, const LineSegment& b) {
  if (segments_intersect(a, b)) return 0.0;
  return std::min(std::min(point_segment_distance(a.s, b),
                           point_segment_distance(a.e, b)),
                  std::min(point_segment_distance(b.s, a),
                           point_segment_distance(b.e, a)));
}

TrackerState::TrackerState(const TrackerConfig& cfg) : cfg_(cfg) {}

int TrackerState::live_count() const {
  int n = 0;
  for (const Track& t : tracks_)
    if (t.status == Track::Status::Live) ++n;
  return n;
}

void TrackerState::admit(const std::vector<DetectedSegment>& candidates,
                         int frame) {
  std::vector<LineSegment> live_segs;
  for (const Track& t : tracks_)
    if (t.status == Track::Status::Live)
      live_segs.push_back(t.observations.back().seg);

  std::vector<const DetectedSegment*> ordered;
  for (const DetectedSegment& c : candidates) ordered.push_back(&c);
  std::sort(ordered.begin(), ordered.end(),
            [](const DetectedSegment* a, const DetectedSegment* b) {
              const double la = a->seg.length();
              const double lb = b->seg.length();
              if (la != lb) return la > lb;
              return a->id < b->id;
            });

  for (const DetectedSegment* c : ordered) {
    if (live_count() >= cfg_.target_lines) break;
    bool excluded = false;
    for (const LineSegment& seg : live_segs)
      if (segment_distance(c->seg, seg) < cfg_.exclusion_radius) {
        excluded = true;
        break;
      }
    if (excluded) continue;
    Track t;
    t.id = next_id_++;
    t.seed_id = c->id;
    t.observations.push_back({frame, c->seg});
    tracks_.push_back(std::move(t));
    live_segs.push_back(c->seg);
  }
}

void TrackerState::start(const Image& first,
                         const std::vector<DetectedSegment>& seeds) {
  tracks_.clear();
  next_id_ = 0;
  frame_ = 0;
  admit(seeds, 0);
  last_image_ = first;
  last_pyramid_ = build_pyramid(first, cfg_.align.pyramid_scale,
                                cfg_.align.pyramid_height);
}

namespace {

struct TrackTask {
  TrackRecord record;
  std::optional<LineSegment> observation;
  std::vector<IterationRecord> diag;
};

// Advances one track into img_c. Any tracking error retires the track;
// the record reports the failure with the previous observation's geometry.
TrackTask advance_track(const Track& track, const Image& img_l,
                        const Pyramid& pyr_l, const Image& img_c,
                        const Pyramid& pyr_c,
                        const std::optional<RotationPrior>& prior,
                        const TrackerConfig& cfg, int frame, bool want_diag) {
  TrackTask task;
  const LineSegment& prev = track.observations.back().seg;
  task.record.frame = frame;
  task.record.track_id = track.id;
  task.record.seed_id = track.seed_id;
  task.record.live = false;
  task.record.s = prev.s;
  task.record.e = prev.e;

  DiagnosticsSink sink;
  if (want_diag)
    sink = [&task](const IterationRecord& rec) { task.diag.push_back(rec); };

  try {
    const LinearLine prev_line = line_from_endpoints(prev);
    const double prev_alpha = line_frame(prev_line).alpha;

    std::vector<SamplePoint> points;
    for (const Vec2& raw : sample_line_points(prev, cfg.align.sampling)) {
      if (!img_l.contains(raw, 2.0)) continue;
      Vec2 pos = raw;
      if (!is_appropriate(pos, prev_alpha, img_l, cfg.align.sampling)) {
        const auto fixed =
            remediate_point(raw, prev.direction(), prev_alpha, img_l,
                            cfg.align.sampling);
        if (!fixed) continue;
        pos = *fixed;
      }
      SamplePoint sp;
      sp.pos_l = pos;
      points.push_back(sp);
    }
    if (points.size() < 3) return task;

    AlignInit init;
    double predicted_alpha = prev_alpha;
    if (prior) {
      const Homography h =
          homography_from_rotation(prior->rotation, prior->intrinsics);
      init.warp = h.affine();
      for (const SamplePoint& sp : points)
        init.points_c.push_back(transform_point(h, sp.pos_l));
      const Prediction pred = predict(h, prev.midpoint(), prev_line);
      init.line_c = linear_to_normal(pred.line);
      predicted_alpha = line_frame(pred.line).alpha;
    } else {
      for (const SamplePoint& sp : points) init.points_c.push_back(sp.pos_l);
      init.line_c = linear_to_normal(prev_line);
    }

    const AlignResult aligned = pyramidal_align(
        pyr_l, pyr_c, linear_to_normal(prev_line), points, init, cfg.align,
        sink);
    if (aligned.failure_reason) return task;

    task.record.iterations =
        aligned.first_step_iterations + aligned.second_step_iterations;

    NormalLine final_line = aligned.line_c;
    std::vector<Vec2> tracked;
    if (cfg.refine_enabled) {
      const RefineResult refined = refine_orientation_position(
          aligned, predicted_alpha, img_l, img_c, cfg.refine);
      final_line = refined.line;
      tracked = refined.points;
    } else {
      for (const SamplePoint& sp : aligned.points_c)
        if (sp.status == PointStatus::Converged)
          tracked.push_back(project_point_to_line(sp.pos_c, aligned.line_c));
      if (tracked.size() < 2) return task;
    }
    task.record.n_points = static_cast<int>(tracked.size());

    std::optional<LineSegment> obs;
    if (cfg.refine_enabled && cfg.extend_enabled) {
      obs = extend_endpoints(normal_to_linear(final_line), tracked, img_c,
                             cfg.refine, cfg.align.sampling);
    } else {
      // Extent from the extremal tracked points alone.
      size_t ia = 0, ib = 1;
      double best = -1.0;
      for (size_t i = 0; i < tracked.size(); ++i)
        for (size_t j = i + 1; j < tracked.size(); ++j) {
          const double d2 = (tracked[i] - tracked[j]).squaredNorm();
          if (d2 > best) {
            best = d2;
            ia = i;
            ib = j;
          }
        }
      const LinearLine ll = normal_to_linear(final_line);
      obs = LineSegment(project_point_to_line(tracked[ia], ll),
                        project_point_to_line(tracked[ib], ll));
    }

    task.observation = obs;
    task.record.live = true;
    task.record.s = obs->s;
    task.record.e = obs->e;
  } catch (const Error&) {
    task.record.live = false;
    task.observation.reset();
  }
  return task;
}

}  // namespace

std::vector<TrackRecord> TrackerState::track_frame(
    const Image& img_c, const std::optional<RotationPrior>& prior,
    const TrackDiagFactory& diag_factory) {
  if (!last_image_ || frame_ < 0)
    throw NotInitialized("track_frame called before start");
  const int frame = frame_ + 1;
  const Pyramid pyr_c = build_pyramid(img_c, cfg_.align.pyramid_scale,
                                      cfg_.align.pyramid_height);

  std::vector<Track*> live;
  for (Track& t : tracks_)
    if (t.status == Track::Status::Live) live.push_back(&t);

  std::vector<TrackTask> tasks(live.size());
  const bool want_diag = static_cast<bool>(diag_factory);
  auto work = [&](size_t i) {
    tasks[i] = advance_track(*live[i], *last_image_, *last_pyramid_, img_c,
                             pyr_c, prior, cfg_, frame, want_diag);
  };
  const int jobs = std::max(1, cfg_.jobs);
  if (jobs == 1 || live.size() <= 1) {
    for (size_t i = 0; i < live.size(); ++i) work(i);
  } else {
    std::atomic<size_t> cursor{0};
    std::vector<std::thread> pool;
    const size_t n_threads =
        std::min(static_cast<size_t>(jobs), live.size());
    for (size_t t = 0; t < n_threads; ++t)
      pool.emplace_back([&]() {
        for (size_t i = cursor.fetch_add(1); i < live.size();
             i = cursor.fetch_add(1))
          work(i);
      });
    for (std::thread& t : pool) t.join();
  }

  std::vector<TrackRecord> report;
  report.reserve(tasks.size());
  for (size_t i = 0; i < tasks.size(); ++i) {
    TrackTask& task = tasks[i];
    if (task.observation) {
      live[i]->observations.push_back({frame, *task.observation});
    } else {
      live[i]->status = Track::Status::Lost;
    }
    if (diag_factory) {
      const DiagnosticsSink sink = diag_factory(live[i]->id);
      if (sink)
        for (const IterationRecord& rec : task.diag) sink(rec);
    }
    report.push_back(task.record);
  }

  last_image_ = img_c;
  last_pyramid_ = pyr_c;
  frame_ = frame;
  return report;
}

void TrackerState::replenish(DetectorInterface& detector, const Image& img_c) {
  if (frame_ < 0) throw NotInitialized("replenish called before start");
  if (live_count() >= cfg_.target_lines) return;
  std::vector<LineSegment> exclusions;
  for (const Track& t : tracks_)
    if (t.status == Track::Status::Live)
      exclusions.push_back(t.observations.back().seg);
  admit(detector.detect(img_c, exclusions), frame_);
}

}  // namespace lof
