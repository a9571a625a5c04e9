#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "capmon/errors.hpp"
#include "capmon/policy_config.hpp"
#include "capmon/probe.hpp"

using namespace capmon;
namespace fs = std::filesystem;

TEST_CASE("defaults and full document") {
  auto d = parse_policy("{}");
  CHECK(d.policy.mode == PolicyMode::None);
  CHECK(d.monitor.context_budget == 4096);
  CHECK(d.sidecar_fail_open);

  auto p = parse_policy(R"({"mode":"express_monitor","detector":"conf_curv","alpha":0.4,"beta":0.6,
      "smoothing_window":3,"curvature_scheme":"forward","curvature_sign":"positive",
      "decision_stages":[5,10],"num_stages":20,"context_budget":2048,"implicit_thinking":true,
      "sidecar_failure":"closed"})");
  CHECK(p.policy.mode == PolicyMode::ExpressMonitor);
  CHECK(p.policy.detector == Detector::ConfCurv);
  CHECK(p.policy.indicator.alpha == 0.4);
  CHECK(p.policy.indicator.beta == 0.6);
  CHECK(p.policy.indicator.smoothing_window == 3);
  CHECK(p.policy.indicator.curvature_scheme == CurvatureScheme::Forward);
  CHECK(p.policy.indicator.curvature_sign == CurvatureSign::Positive);
  CHECK(p.policy.decision_stage_percents == std::vector<double>{5, 10});
  CHECK(p.monitor.num_stages == 20);
  CHECK(p.monitor.context_budget == 2048);
  CHECK(p.monitor.implicit_thinking);
  CHECK_FALSE(p.sidecar_fail_open);
}

TEST_CASE("rejections") {
  CHECK_THROWS_AS(parse_policy(R"({"mdoe":"none"})"), ConfigError);
  CHECK_THROWS_AS(parse_policy(R"({"mode":"sometimes"})"), ConfigError);
  CHECK_THROWS_AS(parse_policy(R"({"alpha":1.5})"), ConfigError);
  CHECK_THROWS_AS(parse_policy(R"({"decision_stages":[10,5]})"), ConfigError);
  CHECK_THROWS_AS(parse_policy(R"({"sidecar_failure":"maybe"})"), ConfigError);
  CHECK_THROWS_AS(parse_policy("[1]"), ConfigError);
  CHECK_THROWS_AS(parse_policy("{"), ConfigError);
  CHECK_THROWS(parse_policy(R"({"mode":"hidden_monitor"})"));
}

TEST_CASE("probe path and template directory resolve relative to the file") {
  auto dir = fs::temp_directory_path() / "capmon_policy_test";
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::vector<HiddenStateRecord> recs;
  for (int i = 0; i < 8; ++i) {
    HiddenStateRecord r;
    r.trace_id = "r" + std::to_string(i);
    r.vector = {float(i % 2 ? 2 + i : -2 - i), float(i)};
    r.label = i % 2 ? SolvabilityLabel::Unsolvable : SolvabilityLabel::Solvable;
    recs.push_back(r);
  }
  save_probe_file((dir / "probe.json").string(), fit_lda(recs));
  {
    std::ofstream(dir / "policy.json") << R"({"mode":"hidden_monitor","probe":"probe.json","templates_dir":")"
                                       << CAPMON_DATA_DIR << R"(/templates"})";
  }
  auto pf = load_policy_file((dir / "policy.json").string());
  REQUIRE(pf.policy.probe);
  CHECK(pf.policy.probe->dim() == 2);
  CHECK(pf.probe_path == (dir / "probe.json").string());

  fs::create_directories(dir / "tpl");
  for (const char* f : {"reprompt_suffix.txt", "output_prefix.txt", "boost_abstention_system.txt"})
    fs::copy_file(fs::path(CAPMON_DATA_DIR) / "templates" / f, dir / "tpl" / f);
  CHECK_NOTHROW(verify_templates((dir / "tpl").string()));
  { std::ofstream(dir / "tpl" / "output_prefix.txt", std::ios::app) << "\n"; }
  CHECK_THROWS_AS(verify_templates((dir / "tpl").string()), ConfigError);
  fs::remove_all(dir);
}
