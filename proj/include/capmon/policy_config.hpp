#pragma once

#include <memory>
#include <string>
#include <string_view>

#include "capmon/intervention.hpp"
#include "capmon/monitor.hpp"

namespace capmon {

// Deployment policy as read from a JSON policy file:
//
//   {
//     "mode": "none" | "express_monitor" | "hidden_monitor" | "boost_abstention",
//     "detector": "conf_diff" | "conf_curv",
//     "alpha": 0.5, "beta": 0.5, "smoothing_window": 5,
//     "curvature_scheme": "central" | "forward",
//     "curvature_sign": "negative" | "positive",
//     "decision_stages": [2, 5, 10, 20],
//     "num_stages": 50,
//     "context_budget": 4096,
//     "implicit_thinking": false,
//     "probe": "path/to/probe.json",
//     "sidecar_failure": "open" | "closed",
//     "templates_dir": "data/templates"
//   }
//
// Every key is optional. Relative paths resolve against `base_dir`.
struct PolicyFile {
  InterventionPolicy policy;
  MonitorConfig monitor;
  bool sidecar_fail_open = true;
  std::string probe_path;
  std::string templates_dir;
};

PolicyFile parse_policy(std::string_view json_text, const std::string& base_dir = {});
PolicyFile load_policy_file(const std::string& path);

// Checks that the template files in `dir` are byte-identical to the
// built-in texts. Throws ConfigError naming the first mismatch.
void verify_templates(const std::string& dir);

}  // namespace capmon
