#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <regex>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lof/config.hpp"
#include "lof/eval.hpp"
#include "lof/pipeline.hpp"
#include "lof/synth.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitAssert = 1;
constexpr int kExitInput = 2;
constexpr int kExitIo = 3;
constexpr int kExitEmptySeed = 4;
constexpr int kExitMismatch = 5;

struct SynthArgs {
  std::string spec_path;
  std::string out_dir;
};

struct TrackArgs {
  std::string frames_dir;
  std::string seeds_path;
  std::string gt_replenish_path;
  std::string config_path;
  std::string out_path;
  std::string priors_path;
  bool dump_diagnostics = false;
  bool no_refine = false;
  bool no_extend = false;
  bool single_step = false;
  std::map<std::string, std::string> overrides;
};

struct EvalArgs {
  std::string report_path;
  std::string gt_path;
  std::string config_path;
  std::string csv_path;
  std::vector<std::string> assertions;
  std::map<std::string, std::string> overrides;
};

// Registers every config key as a --key flag so runs are fully scriptable
// without a config file; flag values win over file values.
void add_config_options(CLI::App* cmd,
                        std::map<std::string, std::string>& overrides) {
  for (const lof::ConfigKey& key : lof::config_keys()) {
    cmd->add_option_function<std::string>(
        "--" + key.name,
        [&overrides, name = key.name](const std::string& v) {
          overrides[name] = v;
        },
        key.description + " [default " + key.default_value + "]");
  }
}

lof::RunConfig resolve_config(const std::string& config_path,
                              const std::map<std::string, std::string>& overrides) {
  lof::RunConfig cfg;
  if (!config_path.empty()) cfg = lof::load_run_config(config_path);
  for (const auto& [key, value] : overrides)
    lof::apply_config_key(cfg, key, value);
  return cfg;
}

int run_synth(const SynthArgs& args) {
  const lof::SceneSpec spec = lof::load_scene_spec(args.spec_path);
  lof::validate_spec(spec);
  std::filesystem::create_directories(args.out_dir);
  for (int f = 0; f < spec.frames; ++f) {
    const lof::Image img = lof::render_frame(spec, f);
    char name[32];
    std::snprintf(name, sizeof(name), "frame_%04d.pgm", f);
    lof::save_pgm(img, (std::filesystem::path(args.out_dir) / name).string());
  }
  const lof::GroundTruth gt = lof::ground_truth(spec);
  lof::save_ground_truth(
      gt, (std::filesystem::path(args.out_dir) / "gt.json").string());
  std::cout << "wrote " << spec.frames << " frames (" << spec.canvas_w << "x"
            << spec.canvas_h << ", " << spec.lines.size()
            << " lines) and gt.json to " << args.out_dir << "\n";
  return kExitOk;
}

int run_track(const TrackArgs& args) {
  lof::RunConfig cfg = resolve_config(args.config_path, args.overrides);
  if (args.no_refine) cfg.tracker.refine_enabled = false;
  if (args.no_extend) cfg.tracker.extend_enabled = false;
  if (args.single_step) cfg.tracker.align.two_step = false;

  const std::vector<lof::Image> frames = lof::load_frames(args.frames_dir);

  lof::GroundTruth gt;
  const lof::GroundTruth* replenish_gt = nullptr;
  std::vector<lof::DetectedSegment> seeds;
  if (!args.gt_replenish_path.empty()) {
    gt = lof::load_ground_truth(args.gt_replenish_path);
    replenish_gt = &gt;
  } else if (!args.seeds_path.empty()) {
    seeds = lof::load_seed_segments(args.seeds_path);
  } else {
    throw lof::ParseError("track needs --seeds or --gt-replenish");
  }

  if (replenish_gt) {
    lof::GtReplenishDetector probe(gt);
    probe.set_frame(0);
    if (probe.detect(frames[0], {}).empty()) {
      std::cerr << "frame 0 of the ground truth has no visible lines to seed\n";
      return kExitEmptySeed;
    }
  } else if (seeds.empty()) {
    std::cerr << "seed file lists no segments\n";
    return kExitEmptySeed;
  }

  std::vector<lof::RotationPrior> priors;
  if (!args.priors_path.empty())
    priors = lof::load_rotation_priors(args.priors_path);

  const lof::TrackingOutputs out = lof::run_tracking(
      frames, seeds, replenish_gt, priors, cfg, args.dump_diagnostics);
  lof::write_text_file(args.out_path, lof::report_to_jsonl(out.report));
  if (args.dump_diagnostics) {
    std::string diag;
    for (const std::string& line : out.diag_jsonl) {
      diag += line;
      diag += '\n';
    }
    lof::write_text_file(args.out_path + ".diag.jsonl", diag);
  }
  std::cout << "tracked " << frames.size() << " frames, "
            << out.report.size() << " report rows -> " << args.out_path
            << "\n";
  return kExitOk;
}

bool check_assertion(const std::string& expr, const lof::MetricsReport& m,
                     std::string& message) {
  static const std::regex pattern(
      R"(^\s*(accuracy|n_matches|tracking_length)\s*(>=|<=|==|>|<)\s*([-+0-9.eE]+)\s*$)");
  std::smatch match;
  if (!std::regex_match(expr, match, pattern))
    throw lof::ParseError("bad --assert expression '" + expr + "'");
  const std::string metric = match[1];
  const std::string op = match[2];
  const double bound = std::stod(match[3]);
  double value = 0.0;
  if (metric == "accuracy") value = m.accuracy;
  if (metric == "n_matches") value = m.n_matches;
  if (metric == "tracking_length") value = m.tracking_length;
  bool ok = false;
  if (op == ">=") ok = value >= bound;
  if (op == "<=") ok = value <= bound;
  if (op == "==") ok = value == bound;
  if (op == ">") ok = value > bound;
  if (op == "<") ok = value < bound;
  if (!ok)
    message = "assert failed: " + metric + "=" + std::to_string(value) +
              " violates '" + expr + "'";
  return ok;
}

int run_eval(const EvalArgs& args) {
  const lof::RunConfig cfg = resolve_config(args.config_path, args.overrides);
  const std::vector<lof::TrackRecord> report =
      lof::load_report(args.report_path);
  const lof::GroundTruth gt = lof::load_ground_truth(args.gt_path);
  const lof::MetricsReport metrics = lof::compute_metrics(
      report, gt, cfg.eval_threshold, cfg.min_overlap);

  std::cout << lof::metrics_table(metrics);
  lof::write_text_file(args.report_path + ".metrics.json",
                       lof::metrics_to_json(metrics) + "\n");
  if (!args.csv_path.empty())
    lof::write_text_file(args.csv_path, lof::metrics_csv(metrics));

  for (const std::string& expr : args.assertions) {
    std::string message;
    if (!check_assertion(expr, metrics, message)) {
      std::cerr << message << "\n";
      return kExitAssert;
    }
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Line segment tracking by joint point-and-line optical flow"};
  app.require_subcommand(1);

  SynthArgs synth_args;
  CLI::App* synth = app.add_subcommand(
      "synth", "Render a synthetic scene spec to frames plus ground truth");
  synth->add_option("spec", synth_args.spec_path, "scene spec JSON")
      ->required();
  synth->add_option("out_dir", synth_args.out_dir, "output directory")
      ->required();

  TrackArgs track_args;
  CLI::App* track = app.add_subcommand(
      "track", "Track lines across a rendered frame sequence");
  track->add_option("frames_dir", track_args.frames_dir,
                    "directory of frame_NNNN.pgm files")
      ->required();
  track->add_option("--out", track_args.out_path, "report output path (JSON lines)")
      ->required();
  track->add_option("--seeds", track_args.seeds_path,
                    "JSON array of [sx,sy,ex,ey] frame-0 segments");
  track->add_option("--gt-replenish", track_args.gt_replenish_path,
                    "gt.json to seed frame 0 and replace lost lines");
  track->add_option("--config", track_args.config_path, "key=value config file");
  track->add_option("--rotation-priors", track_args.priors_path,
                    "per-transition camera rotation priors JSON");
  track->add_flag("--dump-diagnostics", track_args.dump_diagnostics,
                  "write per-iteration records next to the report");
  track->add_flag("--no-refine", track_args.no_refine,
                  "skip orientation/position refinement and extension");
  track->add_flag("--no-extend", track_args.no_extend,
                  "skip endpoint extension only");
  track->add_flag("--single-step", track_args.single_step,
                  "disable the occlusion-shedding second alignment step");
  add_config_options(track, track_args.overrides);

  EvalArgs eval_args;
  CLI::App* eval = app.add_subcommand(
      "eval", "Score a track report against ground truth");
  eval->add_option("report", eval_args.report_path, "track report JSON lines")
      ->required();
  eval->add_option("gt", eval_args.gt_path, "ground truth JSON")->required();
  eval->add_option("--config", eval_args.config_path, "key=value config file");
  eval->add_option("--csv", eval_args.csv_path, "write per-track rows as CSV");
  eval->add_option("--assert", eval_args.assertions,
                   "metric check like 'accuracy>=0.95'; exit 1 on failure");
  eval->add_option_function<std::string>(
      "--threshold",
      [&eval_args](const std::string& v) {
        eval_args.overrides["eval_threshold"] = v;
      },
      "shorthand for --eval_threshold");
  add_config_options(eval, eval_args.overrides);

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) return run_synth(synth_args);
    if (track->parsed()) return run_track(track_args);
    if (eval->parsed()) return run_eval(eval_args);
  } catch (const lof::FrameMismatch& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitMismatch;
  } catch (const lof::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const lof::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }
  return kExitOk;
}
