#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "lof/config.hpp"
#include "lof/pipeline.hpp"

using namespace lof;
namespace fs = std::filesystem;

namespace {

struct CliResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "lof_cli_tests" / name;
  fs::create_directories(dir);
  return dir;
}

CliResult run_cli(const std::string& args, const fs::path& dir) {
  static int counter = 0;
  const fs::path out = dir / ("stdout_" + std::to_string(counter) + ".txt");
  const fs::path err = dir / ("stderr_" + std::to_string(counter) + ".txt");
  ++counter;
  const std::string cmd = std::string(LOF_CLI_PATH) + " " + args + " > " +
                          out.string() + " 2> " + err.string();
  const int rc = std::system(cmd.c_str());
  CliResult res;
  res.exit_code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  res.out = read_text_file(out.string());
  res.err = read_text_file(err.string());
  return res;
}

std::string read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

const char* kSceneJson = R"({
  "canvas": [160, 120],
  "frames": 4,
  "background": {"seed": 21, "amplitude": 25.0, "cell": 6.0},
  "lines": [
    {"s": [20, 30], "e": [140, 30], "contrast": 90.0},
    {"s": [25, 85], "e": [135, 90], "contrast": 85.0}
  ],
  "motion": {"type": "translation", "velocity": [2.0, 1.0]}
})";

// Renders the shared scene once per binary run and hands out the directory.
fs::path rendered_scene() {
  static fs::path frames_dir = [] {
    const fs::path dir = scratch_dir("scene");
    write_text_file((dir / "spec.json").string(), kSceneJson);
    const CliResult res = run_cli(
        "synth " + (dir / "spec.json").string() + " " +
            (dir / "frames").string(),
        dir);
    REQUIRE(res.exit_code == 0);
    return dir / "frames";
  }();
  return frames_dir;
}

}  // namespace

TEST_CASE("defaults survive an empty config") {
  const RunConfig cfg = parse_run_config("");
  CHECK(cfg.tracker.align.sampling.grad_threshold == 5.0);
  CHECK(cfg.tracker.align.sampling.angle_threshold ==
        doctest::Approx(deg_to_rad(22.5)));
  CHECK(cfg.tracker.align.sampling.spacing == 8.0);
  CHECK(cfg.tracker.align.sampling.min_points == 5);
  CHECK(cfg.tracker.align.sampling.max_points == 30);
  CHECK(cfg.tracker.align.sampling.corner_lambda_min == 500.0);
  CHECK(cfg.tracker.align.max_iterations == 30);
  CHECK(cfg.tracker.align.point_epsilon == 0.05);
  CHECK(cfg.tracker.align.beta_epsilon == 0.002);
  CHECK(cfg.tracker.align.d_epsilon == 0.05);
  CHECK(cfg.tracker.align.convergence_fraction == 0.4);
  CHECK(cfg.tracker.align.structural_weight == 441.0);
  CHECK(cfg.tracker.align.half_window == 10);
  CHECK(cfg.tracker.align.pyramid_scale == 1.5);
  CHECK(cfg.tracker.align.pyramid_height == 4);
  CHECK(cfg.tracker.align.two_step);
  CHECK(cfg.tracker.refine.rotation_cap == 20);
  CHECK(cfg.tracker.refine.extension_max == 200.0);
  CHECK(cfg.tracker.target_lines == 50);
  CHECK(cfg.tracker.exclusion_radius == 10.0);
  CHECK(cfg.tracker.refine_enabled);
  CHECK(cfg.tracker.extend_enabled);
  CHECK(cfg.tracker.jobs == 1);
  CHECK(cfg.eval_threshold == 5.0);
  CHECK(cfg.min_overlap == 0.5);
}

TEST_CASE("every key documents itself and parses its own default") {
  const std::vector<ConfigKey>& keys = config_keys();
  CHECK(keys.size() >= 25);
  std::set<std::string> names;
  RunConfig cfg;
  for (const ConfigKey& key : keys) {
    CHECK(names.insert(key.name).second);
    CHECK_FALSE(key.description.empty());
    CHECK_NOTHROW(apply_config_key(cfg, key.name, key.default_value));
  }
}

TEST_CASE("config text updates the right knobs") {
  const RunConfig cfg = parse_run_config(
      "# full line comment\n"
      "grad_threshold = 7.5\n"
      "pyramid_height=2   # trailing comment\n"
      "two_step = false\n"
      "\n"
      "  spacing =  4\n"
      "angle_threshold_deg = 30\n");
  CHECK(cfg.tracker.align.sampling.grad_threshold == 7.5);
  CHECK(cfg.tracker.align.pyramid_height == 2);
  CHECK_FALSE(cfg.tracker.align.two_step);
  CHECK(cfg.tracker.align.sampling.spacing == 4.0);
  CHECK(cfg.tracker.align.sampling.angle_threshold ==
        doctest::Approx(deg_to_rad(30.0)));
  CHECK(cfg.tracker.align.half_window == 10);  // untouched
}

TEST_CASE("bad config input is rejected with context") {
  RunConfig cfg;
  CHECK_THROWS_WITH_AS(apply_config_key(cfg, "gradient_thresh", "5"),
                       doctest::Contains("gradient_thresh"), ParseError);
  CHECK_THROWS_WITH_AS(apply_config_key(cfg, "grad_threshold", "abc"),
                       doctest::Contains("number"), ParseError);
  CHECK_THROWS_AS(apply_config_key(cfg, "pyramid_height", "2.5"), ParseError);
  CHECK_THROWS_WITH_AS(apply_config_key(cfg, "two_step", "maybe"),
                       doctest::Contains("true/false"), ParseError);
  CHECK_THROWS_WITH_AS(parse_run_config("grad_threshold = 5\nnonsense\n"),
                       doctest::Contains("line 2"), ParseError);
  CHECK_THROWS_AS(load_run_config("/nonexistent/config.txt"), IoError);
}

TEST_CASE("synth renders frames and ground truth deterministically") {
  const fs::path dir = scratch_dir("synth_det");
  write_text_file((dir / "spec.json").string(), kSceneJson);

  const CliResult first = run_cli(
      "synth " + (dir / "spec.json").string() + " " + (dir / "a").string(),
      dir);
  REQUIRE(first.exit_code == 0);
  const CliResult second = run_cli(
      "synth " + (dir / "spec.json").string() + " " + (dir / "b").string(),
      dir);
  REQUIRE(second.exit_code == 0);

  for (const char* name :
       {"frame_0000.pgm", "frame_0001.pgm", "frame_0002.pgm",
        "frame_0003.pgm", "gt.json"})
    CHECK(read_bytes(dir / "a" / name) == read_bytes(dir / "b" / name));
  CHECK_FALSE(fs::exists(dir / "a" / "frame_0004.pgm"));

  write_text_file((dir / "broken.json").string(), "{not json");
  CHECK(run_cli("synth " + (dir / "broken.json").string() + " " +
                    (dir / "c").string(),
                dir)
            .exit_code == 2);
  CHECK(run_cli("synth " + (dir / "missing.json").string() + " " +
                    (dir / "d").string(),
                dir)
            .exit_code == 3);
}

TEST_CASE("track and eval round trip with assertions") {
  const fs::path frames = rendered_scene();
  const fs::path dir = scratch_dir("e2e");
  const std::string gt = (frames / "gt.json").string();
  const std::string report = (dir / "report.jsonl").string();

  const CliResult tracked = run_cli(
      "track " + frames.string() + " --gt-replenish " + gt + " --out " +
          report,
      dir);
  REQUIRE(tracked.exit_code == 0);
  const std::vector<TrackRecord> rows = load_report(report);
  CHECK(rows.size() == 8);  // 2 lines, a birth row plus 3 tracked frames each
  for (const TrackRecord& r : rows) CHECK(r.live);

  const CliResult ok = run_cli(
      "eval " + report + " " + gt + " --assert 'accuracy>=0.95' --assert "
      "'tracking_length>=3' --csv " + (dir / "tracks.csv").string(),
      dir);
  CHECK(ok.exit_code == 0);
  CHECK(ok.out.find("accuracy") != std::string::npos);
  CHECK(read_text_file((dir / "tracks.csv").string())
            .rfind("track_id,seed_id", 0) == 0);

  const nlohmann::json metrics =
      nlohmann::json::parse(read_text_file(report + ".metrics.json"));
  CHECK(metrics.at("accuracy").get<double>() >= 0.95);
  CHECK(metrics.at("n_frames").get<int>() == 4);

  const CliResult failed = run_cli(
      "eval " + report + " " + gt + " --assert 'accuracy>=1.1'", dir);
  CHECK(failed.exit_code == 1);
  CHECK(failed.err.find("assert failed") != std::string::npos);

  // A zero threshold can never be met, so the metric collapses; this pins
  // the --threshold shorthand to the eval_threshold key.
  const CliResult strict = run_cli(
      "eval " + report + " " + gt + " --threshold 0", dir);
  CHECK(strict.exit_code == 0);
  const nlohmann::json none =
      nlohmann::json::parse(read_text_file(report + ".metrics.json"));
  CHECK(none.at("accuracy").get<double>() == 0.0);
  CHECK(none.at("tracking_length").get<double>() == 0.0);
}

TEST_CASE("seed handling failures use distinct exit codes") {
  const fs::path frames = rendered_scene();
  const fs::path dir = scratch_dir("seeds");

  CHECK(run_cli("track " + frames.string() + " --out " +
                    (dir / "r.jsonl").string(),
                dir)
            .exit_code == 2);

  write_text_file((dir / "empty.json").string(), "[]");
  CHECK(run_cli("track " + frames.string() + " --seeds " +
                    (dir / "empty.json").string() + " --out " +
                    (dir / "r.jsonl").string(),
                dir)
            .exit_code == 4);

  // Explicit seed quadruples work without ground truth.
  write_text_file((dir / "seeds.json").string(),
                  "[[20, 30, 140, 30], [25, 85, 135, 90]]");
  const CliResult res = run_cli(
      "track " + frames.string() + " --seeds " +
          (dir / "seeds.json").string() + " --out " +
          (dir / "r.jsonl").string(),
      dir);
  CHECK(res.exit_code == 0);
  CHECK(load_report((dir / "r.jsonl").string()).size() == 8);
}

TEST_CASE("mismatched ground truth is a distinct failure") {
  const fs::path frames = rendered_scene();
  const fs::path dir = scratch_dir("mismatch");

  // Same scene cut to one frame: the report's later frames overrun it.
  nlohmann::json spec = nlohmann::json::parse(kSceneJson);
  spec["frames"] = 1;
  write_text_file((dir / "short.json").string(), spec.dump());
  REQUIRE(run_cli("synth " + (dir / "short.json").string() + " " +
                      (dir / "short").string(),
                  dir)
              .exit_code == 0);

  const std::string report = (dir / "report.jsonl").string();
  REQUIRE(run_cli("track " + frames.string() + " --gt-replenish " +
                      (frames / "gt.json").string() + " --out " + report,
                  dir)
              .exit_code == 0);
  CHECK(run_cli("eval " + report + " " + (dir / "short" / "gt.json").string(),
                dir)
            .exit_code == 5);
}

TEST_CASE("stage toggles and diagnostics flags are wired through") {
  const fs::path frames = rendered_scene();
  const fs::path dir = scratch_dir("flags");
  const std::string gt = (frames / "gt.json").string();

  const CliResult res = run_cli(
      "track " + frames.string() + " --gt-replenish " + gt + " --out " +
          (dir / "r.jsonl").string() +
          " --no-refine --single-step --pyramid_height 2 --dump-diagnostics",
      dir);
  REQUIRE(res.exit_code == 0);
  CHECK_FALSE(load_report((dir / "r.jsonl").string()).empty());

  const std::string diag =
      read_text_file((dir / "r.jsonl").string() + ".diag.jsonl");
  REQUIRE_FALSE(diag.empty());
  const nlohmann::json first =
      nlohmann::json::parse(diag.substr(0, diag.find('\n')));
  for (const char* key :
       {"frame", "track_id", "level", "phase", "iter", "cost", "beta", "d",
        "n_converged"})
    CHECK(first.contains(key));
  // Height was capped at 2 by the override.
  CHECK(first.at("level").get<int>() <= 1);
}

TEST_CASE("config files and flag overrides compose") {
  const fs::path frames = rendered_scene();
  const fs::path dir = scratch_dir("override");
  const std::string gt = (frames / "gt.json").string();
  const std::string report = (dir / "report.jsonl").string();
  REQUIRE(run_cli("track " + frames.string() + " --gt-replenish " + gt +
                      " --out " + report,
                  dir)
              .exit_code == 0);

  // The file throttles the threshold to zero; the flag restores it.
  write_text_file((dir / "cfg.txt").string(), "eval_threshold = 0\n");
  REQUIRE(run_cli("eval " + report + " " + gt + " --config " +
                      (dir / "cfg.txt").string(),
                  dir)
              .exit_code == 0);
  nlohmann::json from_file =
      nlohmann::json::parse(read_text_file(report + ".metrics.json"));
  CHECK(from_file.at("accuracy").get<double>() == 0.0);

  REQUIRE(run_cli("eval " + report + " " + gt + " --config " +
                      (dir / "cfg.txt").string() + " --eval_threshold 5",
                  dir)
              .exit_code == 0);
  nlohmann::json overridden =
      nlohmann::json::parse(read_text_file(report + ".metrics.json"));
  CHECK(overridden.at("accuracy").get<double>() > 0.9);
}

TEST_CASE("help output names the tools and their knobs") {
  const fs::path dir = scratch_dir("help");
  const CliResult top = run_cli("--help", dir);
  CHECK(top.exit_code == 0);
  for (const char* word : {"synth", "track", "eval"})
    CHECK(top.out.find(word) != std::string::npos);

  const CliResult track_help = run_cli("track --help", dir);
  CHECK(track_help.exit_code == 0);
  for (const char* flag :
       {"--grad_threshold", "--pyramid_height", "--two_step",
        "--gt-replenish", "--single-step", "--dump-diagnostics"})
    CHECK(track_help.out.find(flag) != std::string::npos);
  CHECK(track_help.out.find("[default 5]") != std::string::npos);

  const CliResult eval_help = run_cli("eval --help", dir);
  CHECK(eval_help.exit_code == 0);
  CHECK(eval_help.out.find("--assert") != std::string::npos);
  CHECK(eval_help.out.find("--threshold") != std::string::npos);
}
