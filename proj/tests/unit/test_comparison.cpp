#include <doctest.h>

#include <sstream>

#include "capmon/comparison.hpp"
#include "capmon/errors.hpp"

using namespace capmon;

namespace {
std::string tsv(const EvalReport& r) {
  std::ostringstream os;
  write_report_tsv(os, r);
  return os.str();
}
}  // namespace

TEST_CASE("single arm gives a one-row report") {
  auto corpus = synth_corpus(SynthConfig{});
  ComparisonConfig cfg;
  cfg.budgets = {2048};
  cfg.strategies = {Strategy::Original};
  auto res = run_comparison(corpus, cfg, nullptr);
  REQUIRE(res.report.rows.size() == 1);
  CHECK(res.traces.size() == corpus.items.size());
  for (const auto& t : res.traces) CHECK_NOTHROW(t.validate());
}

TEST_CASE("missing hidden-state records is a configuration error naming the input") {
  auto corpus = synth_corpus(SynthConfig{});
  ComparisonConfig cfg;
  try {
    run_comparison(corpus, cfg, nullptr);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("hidden-state records") != std::string::npos);
  }
  std::vector<HiddenStateRecord> none;
  CHECK_THROWS_AS(run_comparison(corpus, cfg, &none), ConfigError);
}

TEST_CASE("express monitor cuts tokens on the wrong-answer subset") {
  auto corpus = synth_corpus(SynthConfig{});
  ComparisonConfig cfg;
  cfg.strategies = {Strategy::Original, Strategy::MonitorExpress};
  auto res = run_comparison(corpus, cfg, nullptr);
  for (std::size_t b : cfg.budgets) {
    auto* o = res.report.find(Strategy::Original, b);
    auto* e = res.report.find(Strategy::MonitorExpress, b);
    REQUIRE(o);
    REQUIRE(e);
    CHECK(*reduction_percent(e->token_mean, o->token_mean) >= 60.0);
    for (const auto& t : res.traces) CHECK(t.total_tokens <= t.context_budget);
  }
}

TEST_CASE("replay determinism") {
  auto corpus = synth_corpus(SynthConfig{});
  ComparisonConfig cfg;
  cfg.budgets = {2048};
  auto a = run_comparison(corpus, cfg, &corpus.records);
  auto b = run_comparison(corpus, cfg, &corpus.records);
  CHECK(tsv(a.report) == tsv(b.report));
  std::ostringstream ta, tb;
  write_comparison_table(ta, a.report);
  write_comparison_table(tb, b.report);
  CHECK(ta.str() == tb.str());
  CHECK(ta.str().find("+MonitorHidden") != std::string::npos);
}

TEST_CASE("recorded traces regroup into the same report") {
  auto corpus = synth_corpus(SynthConfig{});
  ComparisonConfig cfg;
  cfg.strategies = {Strategy::Original, Strategy::MonitorExpress};
  auto res = run_comparison(corpus, cfg, nullptr);
  auto again = compare_recorded(res.traces);
  REQUIRE(again.rows.size() == res.report.rows.size());
  for (const auto& r : res.report.rows) {
    auto* q = again.find(r.strategy, r.context_budget);
    REQUIRE(q);
    CHECK(q->acc == r.acc);
    CHECK(q->token_mean == r.token_mean);
  }
  CHECK_THROWS_AS(compare_recorded({}), ValidationError);
}

TEST_CASE("config validation") {
  ComparisonConfig cfg;
  cfg.budgets.clear();
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = ComparisonConfig{};
  cfg.detector = Detector::HiddenProbe;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}
