#pragma once

#include <functional>
#include <string>
#include <vector>

#include "lof/tracker.hpp"

namespace lof {

/// Every tunable of the pipeline in one bundle. Defaults match the reference
/// parameter set (gradient threshold 5, angle threshold 22.5 deg, window
/// half-width 10, pyramid scale 1.5 with 4 levels, 40% convergence fraction,
/// 50 maintained lines, 5 px correctness threshold).
struct RunConfig {
  TrackerConfig tracker;
  double eval_threshold = 5.0;
  double min_overlap = 0.5;
};

/// One entry of the config table: key name, default rendered as text, a one
/// line description, and the setter.
struct ConfigKey {
  std::string name;
  std::string default_value;
  std::string description;
  std::function<void(RunConfig&, const std::string&)> apply;
};

const std::vector<ConfigKey>& config_keys();

/// Applies one key=value pair. Throws ParseError on an unknown key or an
/// unparseable value.
void apply_config_key(RunConfig& cfg, const std::string& key,
                      const std::string& value);

/// Parses key=value text: one pair per line, blank lines and lines starting
/// with # ignored, inline "# ..." comments stripped.
RunConfig parse_run_config(const std::string& text);

RunConfig load_run_config(const std::string& path);

}  // namespace lof
