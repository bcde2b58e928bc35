#include <doctest.h>

#include <cmath>
#include <iomanip>
#include <optional>
#include <sstream>
#include <vector>

#include "lof/eval.hpp"
#include "lof/tracker.hpp"

using namespace lof;

namespace {

std::vector<DetectedSegment> seeds_from(const GroundTruth& gt, int frame) {
  std::vector<DetectedSegment> out;
  for (const LineTruth& lt : gt.frames[static_cast<size_t>(frame)].lines)
    if (lt.visible) out.push_back({*lt.visible, lt.id});
  return out;
}

double line_error(const TrackRecord& rec, const LineTruth& truth) {
  const LinearLine ref = line_from_endpoints(truth.segment());
  return std::max(std::fabs(ref.signed_distance(rec.s)),
                  std::fabs(ref.signed_distance(rec.e)));
}

const LineTruth& truth_of(const GroundTruth& gt, int frame, int64_t id) {
  for (const LineTruth& lt : gt.frames[static_cast<size_t>(frame)].lines)
    if (lt.id == id) return lt;
  throw std::logic_error("missing truth line");
}

// Hand-built single-frame ground truth for replenish tests: horizontal
// lines with distinct lengths plus a few adversarial candidates.
GroundTruth admission_gt() {
  GroundTruth gt;
  gt.canvas_w = 320;
  gt.canvas_h = 240;
  FrameTruth ft;
  auto add = [&ft](int64_t id, const Vec2& s, const Vec2& e) {
    LineTruth lt;
    lt.id = id;
    lt.s = s;
    lt.e = e;
    lt.visible = LineSegment(s, e);
    ft.lines.push_back(lt);
  };
  add(0, Vec2(30, 30), Vec2(290, 30));   // 260
  add(1, Vec2(30, 60), Vec2(280, 60));   // 250
  add(2, Vec2(30, 90), Vec2(270, 90));   // 240
  add(3, Vec2(30, 120), Vec2(260, 120)); // 230
  add(4, Vec2(30, 150), Vec2(250, 150)); // 220, ties with 5
  add(5, Vec2(30, 180), Vec2(250, 180)); // 220
  add(6, Vec2(150, 40), Vec2(170, 80));  // crosses line 1
  add(7, Vec2(30, 38), Vec2(250, 38));   // 8 px from line 0
  gt.frames.push_back(ft);
  return gt;
}

std::string fingerprint(const std::vector<TrackRecord>& rows) {
  std::ostringstream os;
  os << std::setprecision(17);
  for (const TrackRecord& r : rows)
    os << r.frame << '|' << r.track_id << '|' << r.seed_id << '|' << r.live
       << '|' << r.s.x() << ',' << r.s.y() << '|' << r.e.x() << ',' << r.e.y()
       << '|' << r.n_points << '|' << r.iterations << '\n';
  return os.str();
}

}  // namespace

TEST_CASE("static scene tracks stay put") {
  SceneSpec spec;
  spec.canvas_w = 320;
  spec.canvas_h = 240;
  spec.frames = 4;
  spec.background.seed = 5;
  spec.background.amplitude = 30.0;
  spec.background.cell = 6.0;
  SceneLine a;
  a.s = Vec2(40, 70);
  a.e = Vec2(280, 70);
  a.contrast = 90.0;
  SceneLine b;
  b.s = Vec2(50, 170);
  b.e = Vec2(270, 155);
  b.contrast = 80.0;
  spec.lines = {a, b};

  const GroundTruth gt = ground_truth(spec);
  TrackerConfig cfg;
  TrackerState tracker(cfg);
  tracker.start(render_frame(spec, 0), seeds_from(gt, 0));
  REQUIRE(tracker.live_count() == 2);

  for (int f = 1; f < spec.frames; ++f) {
    const std::vector<TrackRecord> rows =
        tracker.track_frame(render_frame(spec, f), std::nullopt);
    REQUIRE(rows.size() == 2);
    for (const TrackRecord& rec : rows) {
      REQUIRE(rec.live);
      CHECK(rec.n_points >= 5);
      const LineTruth& lt = truth_of(gt, f, rec.seed_id);
      CHECK(line_error(rec, lt) < 0.5);
      CHECK(is_correct_match(LineSegment(rec.s, rec.e), lt.segment(), 1.0));
    }
  }
  CHECK(tracker.frame() == 3);
}

TEST_CASE("rotation prior rescues a large camera motion") {
  SceneSpec spec;
  spec.canvas_w = 320;
  spec.canvas_h = 240;
  spec.frames = 2;
  spec.background.seed = 31;
  spec.background.amplitude = 30.0;
  spec.background.cell = 6.0;
  SceneLine line;
  line.s = Vec2(60, 60);
  line.e = Vec2(230, 80);
  line.contrast = 95.0;
  spec.lines = {line};
  spec.motion.type = MotionSpec::Type::CameraRotation;
  spec.motion.intrinsics = Intrinsics{260.0, 255.0, 160.0, 120.0};
  spec.motion.axis = Vec3(0.0, 0.0, 1.0);
  spec.motion.deg_per_frame = 30.0;

  const GroundTruth gt = ground_truth(spec);
  const Image f0 = render_frame(spec, 0);
  const Image f1 = render_frame(spec, 1);

  auto run = [&](const std::optional<RotationPrior>& prior) {
    TrackerConfig cfg;
    TrackerState tracker(cfg);
    tracker.start(f0, seeds_from(gt, 0));
    return tracker.track_frame(f1, prior);
  };

  RotationPrior prior;
  prior.rotation = Eigen::AngleAxisd(deg_to_rad(spec.motion.deg_per_frame),
                                     Eigen::Vector3d::UnitZ())
                       .toRotationMatrix();
  prior.intrinsics = spec.motion.intrinsics;

  const std::vector<TrackRecord> with = run(prior);
  REQUIRE(with.size() == 1);
  REQUIRE(with[0].live);
  CHECK(line_error(with[0], truth_of(gt, 1, 0)) < 0.5);

  // A 30 degree turn pivots the line by 30 degrees and sweeps its ends tens
  // of pixels; without the prior the blind start is beyond the pyramid's reach.
  const std::vector<TrackRecord> without = run(std::nullopt);
  REQUIRE(without.size() == 1);
  const bool blind_failed =
      !without[0].live || line_error(without[0], truth_of(gt, 1, 0)) > 2.0;
  CHECK(blind_failed);
}

TEST_CASE("refinement never shortens correct tracking") {
  SceneSpec spec;
  spec.canvas_w = 320;
  spec.canvas_h = 240;
  spec.frames = 8;
  spec.background.seed = 47;
  spec.background.amplitude = 30.0;
  spec.background.cell = 6.0;
  SceneLine a;
  a.s = Vec2(60, 80);
  a.e = Vec2(260, 80);
  a.contrast = 85.0;
  SceneLine b;
  b.s = Vec2(70, 170);
  b.e = Vec2(250, 180);
  b.contrast = 85.0;
  spec.lines = {a, b};
  spec.motion.type = MotionSpec::Type::Rotation2D;
  spec.motion.center = Vec2(160, 120);
  spec.motion.amplitude_deg = 6.0;
  spec.motion.period = 20.0;

  const GroundTruth gt = ground_truth(spec);

  auto run = [&](bool refine) {
    TrackerConfig cfg;
    cfg.refine_enabled = refine;
    cfg.extend_enabled = refine;
    TrackerState tracker(cfg);
    tracker.start(render_frame(spec, 0), seeds_from(gt, 0));
    std::vector<TrackRecord> report;
    for (int f = 1; f < spec.frames; ++f) {
      auto rows = tracker.track_frame(render_frame(spec, f), std::nullopt);
      report.insert(report.end(), rows.begin(), rows.end());
    }
    return compute_metrics(report, gt, 2.0);
  };

  const MetricsReport refined = run(true);
  const MetricsReport bare = run(false);
  CHECK(refined.tracking_length >= bare.tracking_length);
  CHECK(refined.accuracy_defined);
  CHECK(refined.accuracy >= 0.9);
}

TEST_CASE("replenish admits longest first and respects exclusion") {
  const GroundTruth gt = admission_gt();
  GtReplenishDetector detector(gt);
  detector.set_frame(0);

  TrackerConfig cfg;
  cfg.target_lines = 7;
  TrackerState tracker(cfg);

  const Image flat(320, 240, 128.0);
  std::vector<DetectedSegment> seeds;
  for (const DetectedSegment& c : seeds_from(gt, 0))
    if (c.id == 0 || c.id == 2) seeds.push_back(c);
  tracker.start(flat, seeds);
  REQUIRE(tracker.live_count() == 2);
  CHECK(tracker.tracks()[0].seed_id == 0);  // longer seed admitted first
  CHECK(tracker.tracks()[1].seed_id == 2);

  tracker.replenish(detector, flat);

  // Candidates 0 and 2 duplicate live tracks, 6 crosses line 1, and 7 runs
  // 8 px from line 0; the rest are admitted longest first, the length tie
  // between 4 and 5 broken by id.
  CHECK(tracker.live_count() == 6);
  REQUIRE(tracker.tracks().size() == 6);
  const std::vector<std::pair<int64_t, int64_t>> expect{
      {0, 0}, {1, 2}, {2, 1}, {3, 3}, {4, 4}, {5, 5}};
  for (size_t i = 0; i < expect.size(); ++i) {
    CHECK(tracker.tracks()[i].id == expect[i].first);
    CHECK(tracker.tracks()[i].seed_id == expect[i].second);
  }

  // Already at or above target: replenish is a no-op even though candidates
  // remain.
  tracker.replenish(detector, flat);
  CHECK(tracker.tracks().size() == 6);
}

TEST_CASE("lost tracks keep their ids and report their last geometry") {
  SceneSpec spec;
  spec.canvas_w = 320;
  spec.canvas_h = 240;
  spec.frames = 1;
  spec.background.seed = 9;
  spec.background.amplitude = 30.0;
  SceneLine a;
  a.s = Vec2(40, 60);
  a.e = Vec2(280, 60);
  SceneLine b;
  b.s = Vec2(40, 150);
  b.e = Vec2(260, 150);
  spec.lines = {a, b};
  const GroundTruth gt = ground_truth(spec);

  TrackerConfig cfg;
  cfg.target_lines = 2;
  TrackerState tracker(cfg);
  tracker.start(render_frame(spec, 0), seeds_from(gt, 0));
  REQUIRE(tracker.live_count() == 2);

  // A featureless next frame kills every track; the report still carries
  // one row per track with the last observed geometry.
  const Image flat(320, 240, 128.0);
  const std::vector<TrackRecord> rows = tracker.track_frame(flat, std::nullopt);
  REQUIRE(rows.size() == 2);
  for (const TrackRecord& rec : rows) {
    CHECK_FALSE(rec.live);
    const Track& tr = tracker.tracks()[static_cast<size_t>(rec.track_id)];
    CHECK(tr.status == Track::Status::Lost);
    const LineSegment& last = tr.observations.back().seg;
    CHECK(rec.s == last.s);
    CHECK(rec.e == last.e);
  }

  // Dead tracks produce no further rows.
  CHECK(tracker.track_frame(flat, std::nullopt).empty());

  // Replacement tracks never recycle an id.
  GtReplenishDetector detector(gt);
  detector.set_frame(0);
  tracker.replenish(detector, flat);
  REQUIRE(tracker.tracks().size() == 4);
  CHECK(tracker.tracks()[2].id == 2);
  CHECK(tracker.tracks()[3].id == 3);
  CHECK(tracker.live_count() == 2);
}

TEST_CASE("parallel tracking is byte identical to serial") {
  SceneSpec spec;
  spec.canvas_w = 320;
  spec.canvas_h = 240;
  spec.frames = 3;
  spec.background.seed = 71;
  spec.background.amplitude = 30.0;
  spec.background.cell = 6.0;
  for (int i = 0; i < 6; ++i) {
    SceneLine l;
    l.s = Vec2(40.0 + 3.0 * i, 40.0 + 30.0 * i);
    l.e = Vec2(280.0 - 4.0 * i, 44.0 + 30.0 * i);
    l.contrast = 70.0 + 5.0 * i;
    spec.lines.push_back(l);
  }
  spec.motion.type = MotionSpec::Type::Translation;
  spec.motion.velocity = Vec2(1.5, -1.0);
  const GroundTruth gt = ground_truth(spec);

  auto run = [&](int jobs) {
    TrackerConfig cfg;
    cfg.jobs = jobs;
    TrackerState tracker(cfg);
    tracker.start(render_frame(spec, 0), seeds_from(gt, 0));
    std::string fp;
    std::ostringstream diag;
    TrackDiagFactory factory = [&diag](int64_t id) {
      return [&diag, id](const IterationRecord& rec) {
        diag << id << ':' << rec.level << ':' << rec.phase << ':' << rec.iter
             << ':' << rec.n_converged << '\n';
      };
    };
    for (int f = 1; f < spec.frames; ++f)
      fp += fingerprint(tracker.track_frame(render_frame(spec, f),
                                            std::nullopt, factory));
    return fp + "====\n" + diag.str();
  };

  const std::string serial = run(1);
  const std::string parallel = run(4);
  CHECK(serial == parallel);
  CHECK(serial.find("====") != std::string::npos);
}

TEST_CASE("tracking before start is rejected") {
  TrackerConfig cfg;
  TrackerState tracker(cfg);
  const Image img(64, 64, 0.0);
  CHECK_THROWS_AS(tracker.track_frame(img, std::nullopt), NotInitialized);
  GtReplenishDetector detector{GroundTruth{}};
  CHECK_THROWS_AS(tracker.replenish(detector, img), NotInitialized);
}
