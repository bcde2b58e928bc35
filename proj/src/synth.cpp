#include "lof/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace lof {

namespace {

using nlohmann::json;

// Deterministic lattice randoms: the cell index is folded into the seed and
// pushed through two steps of the MMIX linear congruential generator
// (a = 6364136223846793005, c = 1442695040888963407). Documented in the
// README so renders are reproducible across platforms.
double lattice_random(uint64_t seed, int64_t i, int64_t j) {
  uint64_t h = seed;
  h += static_cast<uint64_t>(i) * 0x9E3779B97F4A7C15ULL;
  h += static_cast<uint64_t>(j) * 0xC2B2AE3D27D4EB4FULL;
  h = h * 6364136223846793005ULL + 1442695040888963407ULL;
  h = h * 6364136223846793005ULL + 1442695040888963407ULL;
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

double smoothstep(double t) { return t * t * (3.0 - 2.0 * t); }

double normal_cdf(double z) { return 0.5 * (1.0 + std::erf(z / std::sqrt(2.0))); }

double background_at(const BackgroundSpec& bg, const Vec2& p) {
  const double gx = p.x() / bg.cell;
  const double gy = p.y() / bg.cell;
  const int64_t i = static_cast<int64_t>(std::floor(gx));
  const int64_t j = static_cast<int64_t>(std::floor(gy));
  const double fx = smoothstep(gx - i);
  const double fy = smoothstep(gy - j);
  const double v00 = lattice_random(bg.seed, i, j);
  const double v10 = lattice_random(bg.seed, i + 1, j);
  const double v01 = lattice_random(bg.seed, i, j + 1);
  const double v11 = lattice_random(bg.seed, i + 1, j + 1);
  const double blend = (1.0 - fy) * ((1.0 - fx) * v00 + fx * v10) +
                       fy * ((1.0 - fx) * v01 + fx * v11);
  return bg.base + bg.amplitude * (2.0 * blend - 1.0);
}

double line_contribution(const SceneLine& l, const Vec2& p) {
  const Vec2 d = l.e - l.s;
  const double len = d.norm();
  const Vec2 dir = d / len;
  const Vec2 nrm(-dir.y(), dir.x());
  const Vec2 q = p - l.s;
  const double t = q.dot(dir);
  const double r = q.dot(nrm);
  const double cap = normal_cdf(t / l.cap_sigma) *
                     normal_cdf((len - t) / l.cap_sigma);
  return l.contrast * (normal_cdf(r / l.sigma) - 0.5) * cap;
}

constexpr double kOccluderEdgeSigma = 0.7;

double occluder_opacity(const Occluder& o, int frame, const Vec2& p) {
  const double x0 = o.x0_at(frame);
  const double y0 = o.y0_at(frame);
  const double ox = normal_cdf((p.x() - x0) / kOccluderEdgeSigma) -
                    normal_cdf((p.x() - (x0 + o.w)) / kOccluderEdgeSigma);
  const double oy = normal_cdf((p.y() - y0) / kOccluderEdgeSigma) -
                    normal_cdf((p.y() - (y0 + o.h)) / kOccluderEdgeSigma);
  return ox * oy;
}

double occluder_texture(const Occluder& o, int frame, const Vec2& p) {
  double val = o.intensity;
  const Vec2 origin(o.x0_at(frame), o.y0_at(frame));
  if (o.ramp) {
    const double a = deg_to_rad(o.ramp->angle_deg);
    const Vec2 dir(std::cos(a), std::sin(a));
    const Vec2 center = origin + 0.5 * Vec2(o.w, o.h);
    val += o.ramp->slope * (p - center).dot(dir);
  }
  if (o.stripes) {
    const double a = deg_to_rad(o.stripes->angle_deg);
    const Vec2 dir(std::cos(a), std::sin(a));
    val += o.stripes->amplitude *
           std::sin(2.0 * kPi * (p - origin).dot(dir) / o.stripes->period);
  }
  return val;
}

Mat3 translation_h(const Vec2& t) {
  Mat3 h = Mat3::Identity();
  h(0, 2) = t.x();
  h(1, 2) = t.y();
  return h;
}

Mat3 rotation2d_h(const Vec2& center, double angle_rad) {
  Mat3 r = Mat3::Identity();
  const double c = std::cos(angle_rad);
  const double s = std::sin(angle_rad);
  r(0, 0) = c;
  r(0, 1) = -s;
  r(1, 0) = s;
  r(1, 1) = c;
  return translation_h(center) * r * translation_h(-center);
}

Mat3 axis_angle_rotation(const Vec3& axis, double angle_rad) {
  const Vec3 a = axis.normalized();
  Mat3 k;
  k << 0.0, -a.z(), a.y(), a.z(), 0.0, -a.x(), -a.y(), a.x(), 0.0;
  return Mat3::Identity() + std::sin(angle_rad) * k +
         (1.0 - std::cos(angle_rad)) * k * k;
}

Vec2 get_vec2(const json& j, const char* key, const Vec2& fallback) {
  if (!j.contains(key)) return fallback;
  const auto& a = j.at(key);
  return Vec2(a.at(0).get<double>(), a.at(1).get<double>());
}

MotionSpec parse_motion(const json& j) {
  MotionSpec m;
  const std::string type = j.value("type", "translation");
  if (type == "translation") {
    m.type = MotionSpec::Type::Translation;
    m.velocity = get_vec2(j, "velocity", Vec2::Zero());
  } else if (type == "oscillation") {
    m.type = MotionSpec::Type::Oscillation;
    m.amplitude = get_vec2(j, "amplitude", Vec2::Zero());
    m.period = j.value("period", 60.0);
  } else if (type == "rotation2d") {
    m.type = MotionSpec::Type::Rotation2D;
    m.center = get_vec2(j, "center", Vec2::Zero());
    m.amplitude_deg = j.value("amplitude_deg", 0.0);
    m.period = j.value("period", 60.0);
  } else if (type == "camera_rotation") {
    m.type = MotionSpec::Type::CameraRotation;
    const auto& k = j.at("intrinsics");
    m.intrinsics.fx = k.at("fx").get<double>();
    m.intrinsics.fy = k.at("fy").get<double>();
    m.intrinsics.cx = k.at("cx").get<double>();
    m.intrinsics.cy = k.at("cy").get<double>();
    const auto& ax = j.at("axis");
    m.axis = Vec3(ax.at(0).get<double>(), ax.at(1).get<double>(),
                  ax.at(2).get<double>());
    m.deg_per_frame = j.value("deg_per_frame", 0.0);
  } else if (type == "general") {
    m.type = MotionSpec::Type::General;
    for (const auto& hj : j.at("homographies")) {
      Mat3 h;
      for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) h(r, c) = hj.at(3 * r + c).get<double>();
      m.homographies.push_back(h);
    }
  } else if (type == "compose") {
    m.type = MotionSpec::Type::Compose;
    for (const auto& pj : j.at("parts")) m.parts.push_back(parse_motion(pj));
  } else {
    throw ParseError("unknown motion type '" + type + "'");
  }
  return m;
}

}  // namespace

Mat3 homography_at(const MotionSpec& motion, int frame) {
  switch (motion.type) {
    case MotionSpec::Type::Translation:
      return translation_h(frame * motion.velocity);
    case MotionSpec::Type::Oscillation:
      return translation_h(
          motion.amplitude * std::sin(2.0 * kPi * frame / motion.period));
    case MotionSpec::Type::Rotation2D:
      return rotation2d_h(motion.center,
                          deg_to_rad(motion.amplitude_deg) *
                              std::sin(2.0 * kPi * frame / motion.period));
    case MotionSpec::Type::CameraRotation: {
      const Mat3 r = axis_angle_rotation(
          motion.axis, deg_to_rad(frame * motion.deg_per_frame));
      return motion.intrinsics.matrix() * r * motion.intrinsics.inverse();
    }
    case MotionSpec::Type::General:
      if (frame < 0 || frame >= static_cast<int>(motion.homographies.size()))
        throw FrameOutOfRange("motion list has no homography for frame " +
                              std::to_string(frame));
      return motion.homographies[static_cast<size_t>(frame)];
    case MotionSpec::Type::Compose: {
      Mat3 h = Mat3::Identity();
      for (const auto& part : motion.parts) h = h * homography_at(part, frame);
      return h;
    }
  }
  return Mat3::Identity();
}

SceneSpec parse_scene_spec(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("scene spec is not valid json: ") + e.what());
  }
  try {
    SceneSpec spec;
    spec.canvas_w = j.at("canvas").at(0).get<int>();
    spec.canvas_h = j.at("canvas").at(1).get<int>();
    spec.frames = j.value("frames", 1);
    if (j.contains("background")) {
      const auto& b = j.at("background");
      spec.background.seed = b.value("seed", uint64_t{1});
      spec.background.amplitude = b.value("amplitude", 15.0);
      spec.background.cell = b.value("cell", 16.0);
      spec.background.base = b.value("base", 128.0);
    }
    for (const auto& lj : j.value("lines", json::array())) {
      SceneLine l;
      l.s = get_vec2(lj, "s", Vec2::Zero());
      l.e = get_vec2(lj, "e", Vec2::Zero());
      l.contrast = lj.value("contrast", 80.0);
      l.sigma = lj.value("sigma", 1.0);
      l.cap_sigma = lj.value("cap_sigma", 3.0);
      spec.lines.push_back(l);
    }
    for (const auto& oj : j.value("occluders", json::array())) {
      Occluder o;
      const auto& r = oj.at("rect");
      o.x = r.at(0).get<double>();
      o.y = r.at(1).get<double>();
      o.w = r.at(2).get<double>();
      o.h = r.at(3).get<double>();
      o.velocity = get_vec2(oj, "velocity", Vec2::Zero());
      o.intensity = oj.value("intensity", 200.0);
      if (oj.contains("ramp")) {
        OccluderRamp ramp;
        ramp.angle_deg = oj.at("ramp").value("angle_deg", 0.0);
        ramp.slope = oj.at("ramp").value("slope", 0.0);
        o.ramp = ramp;
      }
      if (oj.contains("stripes")) {
        OccluderStripes st;
        st.period = oj.at("stripes").value("period", 8.0);
        st.angle_deg = oj.at("stripes").value("angle_deg", 0.0);
        st.amplitude = oj.at("stripes").value("amplitude", 0.0);
        o.stripes = st;
      }
      spec.occluders.push_back(o);
    }
    if (j.contains("motion")) spec.motion = parse_motion(j.at("motion"));
    return spec;
  } catch (const json::exception& e) {
    throw ParseError(std::string("scene spec field error: ") + e.what());
  }
}

SceneSpec load_scene_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open scene spec '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scene_spec(buf.str());
}

void validate_spec(const SceneSpec& spec) {
  if (spec.canvas_w < 32 || spec.canvas_h < 32)
    throw ParseError("canvas must be at least 32x32");
  if (spec.frames < 1) throw ParseError("frame count must be positive");

  const Mat3 h0 = homography_at(spec.motion, 0);
  if ((h0 - Mat3::Identity()).cwiseAbs().maxCoeff() > 1e-12)
    throw ParseError("motion must be the identity at frame 0");

  for (int f = 0; f < spec.frames; ++f) {
    Mat3 hm;
    try {
      hm = homography_at(spec.motion, f);
    } catch (const FrameOutOfRange&) {
      throw ParseError("motion does not cover frame " + std::to_string(f));
    }
    const Homography h(hm);
    for (size_t i = 0; i < spec.lines.size(); ++i) {
      for (const Vec2& p : {spec.lines[i].s, spec.lines[i].e}) {
        const Vec2 q = transform_point(h, p);
        if (q.x() < 0.0 || q.y() < 0.0 || q.x() > spec.canvas_w - 1.0 ||
            q.y() > spec.canvas_h - 1.0)
          throw ParseError("line " + std::to_string(i) +
                           " leaves the canvas at frame " + std::to_string(f));
      }
    }
    for (size_t i = 0; i < spec.occluders.size(); ++i) {
      const Occluder& o = spec.occluders[i];
      const double x0 = o.x0_at(f);
      const double y0 = o.y0_at(f);
      if (x0 < 0.0 || y0 < 0.0 || x0 + o.w > spec.canvas_w - 1.0 ||
          y0 + o.h > spec.canvas_h - 1.0)
        throw ParseError("occluder " + std::to_string(i) +
                         " outside canvas at frame " + std::to_string(f));
    }
  }
}

double eval_scene(const SceneSpec& spec, const Vec2& scene_pt) {
  double val = background_at(spec.background, scene_pt);
  for (const auto& l : spec.lines) val += line_contribution(l, scene_pt);
  return val;
}

Image render_frame(const SceneSpec& spec, int frame) {
  if (frame < 0 || frame >= spec.frames)
    throw FrameOutOfRange("frame " + std::to_string(frame) +
                          " outside sequence of " +
                          std::to_string(spec.frames));
  const Mat3 hinv = homography_at(spec.motion, frame).inverse();
  std::vector<uint8_t> data(static_cast<size_t>(spec.canvas_w) *
                            spec.canvas_h);
  for (int v = 0; v < spec.canvas_h; ++v) {
    for (int u = 0; u < spec.canvas_w; ++u) {
      const Vec3 q = hinv * Vec3(u, v, 1.0);
      const Vec2 scene_pt(q.x() / q.z(), q.y() / q.z());
      double val = eval_scene(spec, scene_pt);
      const Vec2 img_pt(u, v);
      for (const auto& o : spec.occluders) {
        const double op = occluder_opacity(o, frame, img_pt);
        if (op > 1e-9)
          val = (1.0 - op) * val + op * occluder_texture(o, frame, img_pt);
      }
      const double rounded = std::floor(val + 0.5);
      data[static_cast<size_t>(v) * spec.canvas_w + u] = static_cast<uint8_t>(
          rounded < 0.0 ? 0.0 : (rounded > 255.0 ? 255.0 : rounded));
    }
  }
  return Image(spec.canvas_w, spec.canvas_h, std::move(data));
}

namespace {

// Clips segment s..e to the rectangle [0, w-1] x [0, h-1] (Liang-Barsky).
// Returns false when nothing of at least 2 px remains.
bool clip_to_canvas(Vec2& s, Vec2& e, int w, int h) {
  const Vec2 d = e - s;
  double t0 = 0.0, t1 = 1.0;
  const double p[4] = {-d.x(), d.x(), -d.y(), d.y()};
  const double q[4] = {s.x() - 0.0, (w - 1.0) - s.x(), s.y() - 0.0,
                       (h - 1.0) - s.y()};
  for (int i = 0; i < 4; ++i) {
    if (p[i] == 0.0) {
      if (q[i] < 0.0) return false;
      continue;
    }
    const double r = q[i] / p[i];
    if (p[i] < 0.0) {
      if (r > t1) return false;
      if (r > t0) t0 = r;
    } else {
      if (r < t0) return false;
      if (r < t1) t1 = r;
    }
  }
  const Vec2 ns = s + t0 * d;
  const Vec2 ne = s + t1 * d;
  s = ns;
  e = ne;
  return (e - s).norm() >= 2.0;
}

struct Interval {
  double lo, hi;
};

// Parameter interval of segment s..e inside the occluder rect at `frame`,
// empty when they miss each other.
std::optional<Interval> occluded_interval(const Occluder& o, int frame,
                                          const Vec2& s, const Vec2& e) {
  const double x0 = o.x0_at(frame), x1 = x0 + o.w;
  const double y0 = o.y0_at(frame), y1 = y0 + o.h;
  const Vec2 d = e - s;
  double t0 = 0.0, t1 = 1.0;
  const double p[4] = {-d.x(), d.x(), -d.y(), d.y()};
  const double q[4] = {s.x() - x0, x1 - s.x(), s.y() - y0, y1 - s.y()};
  for (int i = 0; i < 4; ++i) {
    if (p[i] == 0.0) {
      if (q[i] < 0.0) return std::nullopt;
      continue;
    }
    const double r = q[i] / p[i];
    if (p[i] < 0.0) {
      if (r > t1) return std::nullopt;
      if (r > t0) t0 = r;
    } else {
      if (r < t0) return std::nullopt;
      if (r < t1) t1 = r;
    }
  }
  if (t0 >= t1) return std::nullopt;
  return Interval{t0, t1};
}

}  // namespace

GroundTruth ground_truth(const SceneSpec& spec) {
  GroundTruth gt;
  gt.canvas_w = spec.canvas_w;
  gt.canvas_h = spec.canvas_h;
  for (int f = 0; f < spec.frames; ++f) {
    FrameTruth ft;
    ft.homography = homography_at(spec.motion, f);
    const Homography h(ft.homography);
    for (size_t i = 0; i < spec.lines.size(); ++i) {
      Vec2 s = transform_point(h, spec.lines[i].s);
      Vec2 e = transform_point(h, spec.lines[i].e);
      if (!clip_to_canvas(s, e, spec.canvas_w, spec.canvas_h)) continue;

      LineTruth lt;
      lt.id = static_cast<int64_t>(i);
      lt.s = s;
      lt.e = e;

      std::vector<Interval> covered;
      for (const auto& o : spec.occluders)
        if (auto iv = occluded_interval(o, f, s, e)) covered.push_back(*iv);
      std::sort(covered.begin(), covered.end(),
                [](const Interval& a, const Interval& b) { return a.lo < b.lo; });

      double total = 0.0;
      std::vector<Interval> gaps;
      double cursor = 0.0;
      for (const auto& iv : covered) {
        const double lo = std::max(iv.lo, cursor);
        const double hi = std::max(iv.hi, cursor);
        if (lo > cursor) gaps.push_back(Interval{cursor, lo});
        total += hi - lo;
        cursor = std::max(cursor, hi);
      }
      if (cursor < 1.0) gaps.push_back(Interval{cursor, 1.0});
      lt.occlusion = total;

      const double len = (e - s).norm();
      double best = 0.0;
      Interval best_iv{0.0, 0.0};
      for (const auto& g : gaps)
        if (g.hi - g.lo > best) {
          best = g.hi - g.lo;
          best_iv = g;
        }
      if (best * len >= 2.0)
        lt.visible = LineSegment(s + best_iv.lo * (e - s),
                                 s + best_iv.hi * (e - s));
      ft.lines.push_back(lt);
    }
    gt.frames.push_back(std::move(ft));
  }
  return gt;
}

std::string ground_truth_to_json(const GroundTruth& gt) {
  json root;
  root["canvas"] = {gt.canvas_w, gt.canvas_h};
  json frames = json::array();
  for (size_t f = 0; f < gt.frames.size(); ++f) {
    json fj;
    fj["frame"] = f;
    json hj = json::array();
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) hj.push_back(gt.frames[f].homography(r, c));
    fj["homography"] = hj;
    json lines = json::array();
    for (const auto& lt : gt.frames[f].lines) {
      json lj;
      lj["id"] = lt.id;
      lj["s"] = {lt.s.x(), lt.s.y()};
      lj["e"] = {lt.e.x(), lt.e.y()};
      lj["occlusion"] = lt.occlusion;
      if (lt.visible)
        lj["visible"] = {lt.visible->s.x(), lt.visible->s.y(),
                         lt.visible->e.x(), lt.visible->e.y()};
      else
        lj["visible"] = nullptr;
      lines.push_back(lj);
    }
    fj["lines"] = lines;
    frames.push_back(fj);
  }
  root["frames"] = frames;
  return root.dump();
}

GroundTruth ground_truth_from_json(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("ground truth is not valid json: ") +
                     e.what());
  }
  try {
    GroundTruth gt;
    gt.canvas_w = j.at("canvas").at(0).get<int>();
    gt.canvas_h = j.at("canvas").at(1).get<int>();
    for (const auto& fj : j.at("frames")) {
      FrameTruth ft;
      const auto& hj = fj.at("homography");
      for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c)
          ft.homography(r, c) = hj.at(3 * r + c).get<double>();
      for (const auto& lj : fj.at("lines")) {
        LineTruth lt;
        lt.id = lj.at("id").get<int64_t>();
        lt.s = Vec2(lj.at("s").at(0).get<double>(),
                    lj.at("s").at(1).get<double>());
        lt.e = Vec2(lj.at("e").at(0).get<double>(),
                    lj.at("e").at(1).get<double>());
        lt.occlusion = lj.value("occlusion", 0.0);
        if (lj.contains("visible") && !lj.at("visible").is_null()) {
          const auto& vj = lj.at("visible");
          lt.visible = LineSegment(
              Vec2(vj.at(0).get<double>(), vj.at(1).get<double>()),
              Vec2(vj.at(2).get<double>(), vj.at(3).get<double>()));
        }
        ft.lines.push_back(lt);
      }
      gt.frames.push_back(std::move(ft));
    }
    return gt;
  } catch (const json::exception& e) {
    throw ParseError(std::string("ground truth field error: ") + e.what());
  }
}

GroundTruth load_ground_truth(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open ground truth '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return ground_truth_from_json(buf.str());
}

void save_ground_truth(const GroundTruth& gt, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << ground_truth_to_json(gt) << "\n";
  if (!out) throw IoError("write to '" + path + "' failed");
}

}  // namespace lof
