#include "lof/config.hpp"

#include <fstream>
#include <sstream>

namespace lof {

namespace {

double parse_double(const std::string& key, const std::string& value) {
  size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != value.size())
    throw ParseError("config key '" + key + "' wants a number, got '" +
                     value + "'");
  return out;
}

int parse_int(const std::string& key, const std::string& value) {
  size_t used = 0;
  long out = 0;
  try {
    out = std::stol(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != value.size())
    throw ParseError("config key '" + key + "' wants an integer, got '" +
                     value + "'");
  return static_cast<int>(out);
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ParseError("config key '" + key + "' wants true/false, got '" +
                   value + "'");
}

std::vector<ConfigKey> build_table() {
  std::vector<ConfigKey> keys;
  auto add_double = [&keys](const std::string& name, const std::string& dflt,
                            const std::string& desc,
                            std::function<double&(RunConfig&)> ref) {
    keys.push_back({name, dflt, desc,
                    [name, ref](RunConfig& c, const std::string& v) {
                      ref(c) = parse_double(name, v);
                    }});
  };
  auto add_int = [&keys](const std::string& name, const std::string& dflt,
                         const std::string& desc,
                         std::function<int&(RunConfig&)> ref) {
    keys.push_back({name, dflt, desc,
                    [name, ref](RunConfig& c, const std::string& v) {
                      ref(c) = parse_int(name, v);
                    }});
  };
  auto add_bool = [&keys](const std::string& name, const std::string& dflt,
                          const std::string& desc,
                          std::function<bool&(RunConfig&)> ref) {
    keys.push_back({name, dflt, desc,
                    [name, ref](RunConfig& c, const std::string& v) {
                      ref(c) = parse_bool(name, v);
                    }});
  };

  auto samp = [](RunConfig& c) -> SamplingConfig& {
    return c.tracker.align.sampling;
  };
  auto align = [](RunConfig& c) -> AlignConfig& { return c.tracker.align; };
  auto refine = [](RunConfig& c) -> RefineConfig& { return c.tracker.refine; };

  add_double("grad_threshold", "5", "minimum gradient magnitude for samples",
             [samp](RunConfig& c) -> double& { return samp(c).grad_threshold; });
  keys.push_back(
      {"angle_threshold_deg", "22.5",
       "max angle between gradient and line normal, degrees",
       [](RunConfig& c, const std::string& v) {
         c.tracker.align.sampling.angle_threshold =
             deg_to_rad(parse_double("angle_threshold_deg", v));
       }});
  add_double("spacing", "8", "nominal sample spacing along the line, px",
             [samp](RunConfig& c) -> double& { return samp(c).spacing; });
  add_int("min_points", "5", "minimum samples per line",
          [samp](RunConfig& c) -> int& { return samp(c).min_points; });
  add_int("max_points", "30", "maximum samples per line",
          [samp](RunConfig& c) -> int& { return samp(c).max_points; });
  add_double("remediation_step", "1", "slide step for failed samples, px",
             [samp](RunConfig& c) -> double& { return samp(c).remediation_step; });
  add_int("remediation_max_steps", "3", "slide attempts each way",
          [samp](RunConfig& c) -> int& { return samp(c).remediation_max_steps; });
  add_double("corner_lambda_min", "500",
             "structure tensor threshold for corner points",
             [samp](RunConfig& c) -> double& { return samp(c).corner_lambda_min; });
  add_double("edge_lambda_ratio", "10",
             "eigenvalue ratio separating edges from rejects",
             [samp](RunConfig& c) -> double& { return samp(c).edge_lambda_ratio; });

  add_int("max_iterations", "30", "solver iterations per phase per level",
          [align](RunConfig& c) -> int& { return align(c).max_iterations; });
  add_double("point_epsilon", "0.05", "point update convergence bound, px",
             [align](RunConfig& c) -> double& { return align(c).point_epsilon; });
  add_double("beta_epsilon", "0.002", "line angle convergence bound, rad",
             [align](RunConfig& c) -> double& { return align(c).beta_epsilon; });
  add_double("d_epsilon", "0.05", "line distance convergence bound, px",
             [align](RunConfig& c) -> double& { return align(c).d_epsilon; });
  add_double("convergence_fraction", "0.4",
             "fraction of points ending the first alignment step",
             [align](RunConfig& c) -> double& {
               return align(c).convergence_fraction;
             });
  add_double("structural_weight", "441",
             "weight of the point-on-line residual",
             [align](RunConfig& c) -> double& { return align(c).structural_weight; });
  add_int("half_window", "10", "template half-width, px",
          [align](RunConfig& c) -> int& { return align(c).half_window; });
  add_double("pyramid_scale", "1.5", "downsampling factor between levels",
             [align](RunConfig& c) -> double& { return align(c).pyramid_scale; });
  add_int("pyramid_height", "4", "pyramid levels",
          [align](RunConfig& c) -> int& { return align(c).pyramid_height; });
  add_bool("two_step", "true", "run the occlusion-shedding second step",
           [align](RunConfig& c) -> bool& { return align(c).two_step; });
  add_bool("high_eigen_filter", "true",
           "drop original-level points with unusually high min eigenvalue",
           [align](RunConfig& c) -> bool& { return align(c).high_eigen_filter; });
  add_double("high_eigen_factor", "10",
             "multiple of corner_lambda_min that triggers the filter",
             [align](RunConfig& c) -> double& { return align(c).high_eigen_factor; });

  add_int("rotation_cap", "20", "max rotation candidates in refinement",
          [refine](RunConfig& c) -> int& { return refine(c).rotation_cap; });
  add_double("steps_per_degree", "20", "rotation candidates per degree of gap",
             [refine](RunConfig& c) -> double& { return refine(c).steps_per_degree; });
  add_double("extension_step", "1", "endpoint march step, px",
             [refine](RunConfig& c) -> double& { return refine(c).extension_step; });
  add_double("extension_max", "200", "endpoint march cap, px",
             [refine](RunConfig& c) -> double& { return refine(c).extension_max; });
  add_int("photometric_window", "3", "anchor error half-width, px",
          [refine](RunConfig& c) -> int& { return refine(c).photometric_window; });

  add_int("target_lines", "50", "line count maintained by replenishment",
          [](RunConfig& c) -> int& { return c.tracker.target_lines; });
  add_double("exclusion_radius", "10",
             "min distance of new lines from live ones, px",
             [](RunConfig& c) -> double& { return c.tracker.exclusion_radius; });
  add_bool("refine", "true", "orientation/position refinement stage",
           [](RunConfig& c) -> bool& { return c.tracker.refine_enabled; });
  add_bool("extend", "true", "endpoint extension stage",
           [](RunConfig& c) -> bool& { return c.tracker.extend_enabled; });
  add_int("jobs", "1", "threads for per-line fan-out",
          [](RunConfig& c) -> int& { return c.tracker.jobs; });

  add_double("eval_threshold", "5", "correctness distance threshold, px",
             [](RunConfig& c) -> double& { return c.eval_threshold; });
  add_double("min_overlap", "0.5", "correctness overlap fraction",
             [](RunConfig& c) -> double& { return c.min_overlap; });
  return keys;
}

}  // namespace

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> table = build_table();
  return table;
}

void apply_config_key(RunConfig& cfg, const std::string& key,
                      const std::string& value) {
  for (const ConfigKey& entry : config_keys()) {
    if (entry.name == key) {
      entry.apply(cfg, value);
      return;
    }
  }
  throw ParseError("unknown config key '" + key + "'");
}

namespace {

std::string strip(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

RunConfig parse_run_config(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = strip(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ParseError("config line " + std::to_string(line_no) +
                       " is not key=value: '" + line + "'");
    apply_config_key(cfg, strip(line.substr(0, eq)),
                     strip(line.substr(eq + 1)));
  }
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_run_config(buf.str());
}

}  // namespace lof
