#include "lof/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace lof {

using nlohmann::json;

TrackingOutputs run_tracking(const std::vector<Image>& frames,
                             const std::vector<DetectedSegment>& initial_seeds,
                             const GroundTruth* replenish_gt,
                             const std::vector<RotationPrior>& priors,
                             const RunConfig& cfg, bool dump_diagnostics) {
  if (frames.size() < 2)
    throw ParseError("tracking needs at least 2 frames, got " +
                     std::to_string(frames.size()));
  if (!priors.empty() && priors.size() != frames.size() - 1)
    throw ParseError("got " + std::to_string(priors.size()) +
                     " rotation priors for " +
                     std::to_string(frames.size() - 1) + " frame transitions");

  std::optional<GtReplenishDetector> detector;
  if (replenish_gt) detector.emplace(*replenish_gt);

  std::vector<DetectedSegment> seeds = initial_seeds;
  if (replenish_gt && seeds.empty()) {
    detector->set_frame(0);
    seeds = detector->detect(frames[0], {});
  }

  TrackerState state(cfg.tracker);
  state.start(frames[0], seeds);

  TrackingOutputs out;
  // Every admitted track contributes a birth row so downstream metrics can
  // count survival from the seeding frame.
  size_t reported_births = 0;
  auto emit_births = [&]() {
    const std::vector<Track>& tracks = state.tracks();
    for (; reported_births < tracks.size(); ++reported_births) {
      const Track& t = tracks[reported_births];
      TrackRecord rec;
      rec.frame = t.observations.front().frame;
      rec.track_id = t.id;
      rec.seed_id = t.seed_id;
      rec.live = true;
      rec.s = t.observations.front().seg.s;
      rec.e = t.observations.front().seg.e;
      out.report.push_back(rec);
    }
  };
  emit_births();

  for (size_t f = 1; f < frames.size(); ++f) {
    std::optional<RotationPrior> prior;
    if (!priors.empty()) prior = priors[f - 1];

    TrackDiagFactory diag_factory;
    if (dump_diagnostics) {
      const int frame = static_cast<int>(f);
      diag_factory = [&out, frame](int64_t track_id) -> DiagnosticsSink {
        return [&out, frame, track_id](const IterationRecord& rec) {
          json j;
          j["frame"] = frame;
          j["track_id"] = track_id;
          j["level"] = rec.level;
          j["phase"] = rec.phase;
          j["iter"] = rec.iter;
          j["cost"] = rec.cost;
          j["beta"] = rec.beta;
          j["d"] = rec.d;
          j["n_converged"] = rec.n_converged;
          out.diag_jsonl.push_back(j.dump());
        };
      };
    }

    const std::vector<TrackRecord> rows =
        state.track_frame(frames[f], prior, diag_factory);
    out.report.insert(out.report.end(), rows.begin(), rows.end());

    if (replenish_gt) {
      detector->set_frame(static_cast<int>(f));
      state.replenish(*detector, frames[f]);
      emit_births();
    }
  }
  return out;
}

std::string report_to_jsonl(const std::vector<TrackRecord>& report) {
  std::string out;
  for (const TrackRecord& rec : report) {
    json j;
    j["frame"] = rec.frame;
    j["track_id"] = rec.track_id;
    j["seed_id"] = rec.seed_id;
    j["status"] = rec.live ? "live" : "lost";
    j["s"] = {rec.s.x(), rec.s.y()};
    j["e"] = {rec.e.x(), rec.e.y()};
    j["n_points"] = rec.n_points;
    j["iterations"] = rec.iterations;
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::vector<TrackRecord> parse_report(const std::string& jsonl) {
  std::vector<TrackRecord> out;
  std::istringstream in(jsonl);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      TrackRecord rec;
      rec.frame = j.at("frame").get<int>();
      rec.track_id = j.at("track_id").get<int64_t>();
      rec.seed_id = j.value("seed_id", int64_t{-1});
      rec.live = j.at("status").get<std::string>() == "live";
      rec.s = Vec2(j.at("s").at(0).get<double>(), j.at("s").at(1).get<double>());
      rec.e = Vec2(j.at("e").at(0).get<double>(), j.at("e").at(1).get<double>());
      rec.n_points = j.value("n_points", 0);
      rec.iterations = j.value("iterations", 0);
      out.push_back(rec);
    } catch (const json::exception& e) {
      throw ParseError("report line " + std::to_string(line_no) + ": " +
                       e.what());
    }
  }
  return out;
}

std::vector<TrackRecord> load_report(const std::string& path) {
  return parse_report(read_text_file(path));
}

std::vector<std::string> list_frame_files(const std::string& dir) {
  std::vector<std::string> files;
  for (int i = 0;; ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "frame_%04d.pgm", i);
    const std::filesystem::path p = std::filesystem::path(dir) / name;
    if (!std::filesystem::exists(p)) break;
    files.push_back(p.string());
  }
  if (files.empty())
    throw IoError("no frame_NNNN.pgm files under '" + dir + "'");
  return files;
}

std::vector<Image> load_frames(const std::string& dir) {
  std::vector<Image> frames;
  for (const std::string& path : list_frame_files(dir))
    frames.push_back(load_pgm(path));
  return frames;
}

std::vector<DetectedSegment> load_seed_segments(const std::string& path) {
  json j;
  try {
    j = json::parse(read_text_file(path));
  } catch (const json::exception& e) {
    throw ParseError(std::string("seed file is not valid json: ") + e.what());
  }
  std::vector<DetectedSegment> out;
  try {
    int64_t id = 0;
    for (const auto& row : j) {
      const Vec2 s(row.at(0).get<double>(), row.at(1).get<double>());
      const Vec2 e(row.at(2).get<double>(), row.at(3).get<double>());
      out.push_back({LineSegment(s, e), id++});
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("seed file entry error: ") + e.what());
  }
  return out;
}

std::vector<RotationPrior> load_rotation_priors(const std::string& path) {
  json j;
  try {
    j = json::parse(read_text_file(path));
  } catch (const json::exception& e) {
    throw ParseError(std::string("prior file is not valid json: ") + e.what());
  }
  std::vector<RotationPrior> out;
  try {
    Intrinsics k;
    const auto& kj = j.at("intrinsics");
    k.fx = kj.at("fx").get<double>();
    k.fy = kj.at("fy").get<double>();
    k.cx = kj.at("cx").get<double>();
    k.cy = kj.at("cy").get<double>();
    for (const auto& rj : j.at("rotations")) {
      RotationPrior p;
      p.intrinsics = k;
      for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c)
          p.rotation(r, c) = rj.at(3 * r + c).get<double>();
      out.push_back(p);
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("prior file entry error: ") + e.what());
  }
  return out;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << content;
  if (!out) throw IoError("write to '" + path + "' failed");
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace lof
