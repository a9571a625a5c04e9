#include "capmon/policy_config.hpp"

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "capmon/errors.hpp"
#include "capmon/probe.hpp"

namespace capmon {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string resolve(const std::string& p, const std::string& base) {
  if (p.empty() || base.empty() || fs::path(p).is_absolute()) return p;
  return (fs::path(base) / p).string();
}

}  // namespace

PolicyFile parse_policy(std::string_view json_text, const std::string& base_dir) {
  json j;
  try {
    j = json::parse(json_text.begin(), json_text.end());
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("policy: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("policy: expected a JSON object");

  static const std::set<std::string> known = {
      "mode",           "detector",         "alpha",          "beta",
      "smoothing_window", "curvature_scheme", "curvature_sign", "decision_stages",
      "num_stages",     "context_budget",   "implicit_thinking", "probe",
      "sidecar_failure", "templates_dir"};
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!known.count(it.key())) throw ConfigError("policy: unknown key \"" + it.key() + "\"");

  PolicyFile pf;
  auto& pol = pf.policy;
  try {
    if (j.contains("mode")) pol.mode = policy_mode_from_string(j["mode"].get<std::string>());
    if (j.contains("detector")) pol.detector = detector_from_string(j["detector"].get<std::string>());
    pol.indicator.alpha = j.value("alpha", pol.indicator.alpha);
    pol.indicator.beta = j.value("beta", pol.indicator.beta);
    pol.indicator.smoothing_window = j.value("smoothing_window", pol.indicator.smoothing_window);
    if (j.contains("curvature_scheme")) {
      auto s = j["curvature_scheme"].get<std::string>();
      if (s == "central")
        pol.indicator.curvature_scheme = CurvatureScheme::Central;
      else if (s == "forward")
        pol.indicator.curvature_scheme = CurvatureScheme::Forward;
      else
        throw ConfigError("policy: curvature_scheme must be \"central\" or \"forward\"");
    }
    if (j.contains("curvature_sign")) {
      auto s = j["curvature_sign"].get<std::string>();
      if (s == "negative")
        pol.indicator.curvature_sign = CurvatureSign::Negative;
      else if (s == "positive")
        pol.indicator.curvature_sign = CurvatureSign::Positive;
      else
        throw ConfigError("policy: curvature_sign must be \"negative\" or \"positive\"");
    }
    if (j.contains("decision_stages"))
      pol.decision_stage_percents = j["decision_stages"].get<std::vector<double>>();
    pf.monitor.num_stages = j.value("num_stages", pf.monitor.num_stages);
    pf.monitor.context_budget = j.value("context_budget", pf.monitor.context_budget);
    pf.monitor.implicit_thinking = j.value("implicit_thinking", false);
    if (j.contains("sidecar_failure")) {
      auto s = j["sidecar_failure"].get<std::string>();
      if (s != "open" && s != "closed")
        throw ConfigError("policy: sidecar_failure must be \"open\" or \"closed\"");
      pf.sidecar_fail_open = s == "open";
    }
    pf.probe_path = resolve(j.value("probe", std::string{}), base_dir);
    pf.templates_dir = resolve(j.value("templates_dir", std::string{}), base_dir);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("policy: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("policy: ") + e.what());
  }

  if (!pf.probe_path.empty())
    pol.probe = std::make_shared<const ProbeModel>(load_probe_file(pf.probe_path));
  if (!pf.templates_dir.empty()) verify_templates(pf.templates_dir);
  try {
    pol.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("policy: ") + e.what());
  }
  pf.monitor.validate();
  return pf;
}

PolicyFile load_policy_file(const std::string& path) {
  return parse_policy(slurp(path), fs::path(path).parent_path().string());
}

void verify_templates(const std::string& dir) {
  const std::pair<const char*, std::string_view> files[] = {
      {"reprompt_suffix.txt", reprompt_suffix()},
      {"output_prefix.txt", output_prefix()},
      {"boost_abstention_system.txt", boost_abstention_prompt()},
  };
  for (const auto& [name, text] : files) {
    std::string path = (fs::path(dir) / name).string();
    if (slurp(path) != text) throw ConfigError("template " + path + " differs from the built-in text");
  }
}

}  // namespace capmon
