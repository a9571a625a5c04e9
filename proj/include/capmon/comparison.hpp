#pragma once

#include <cstddef>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include "capmon/indicators.hpp"
#include "capmon/intervention.hpp"
#include "capmon/matcher.hpp"
#include "capmon/metrics.hpp"
#include "capmon/probe.hpp"
#include "capmon/synth.hpp"
#include "capmon/trace.hpp"

namespace capmon {

struct ComparisonConfig {
  std::vector<std::size_t> budgets{2048, 4096};
  std::vector<Strategy> strategies{Strategy::Original, Strategy::BoostAbstention,
                                   Strategy::MonitorExpress, Strategy::MonitorHidden};
  Detector detector = Detector::ConfDiff;
  IndicatorConfig indicator;
  std::vector<double> decision_stage_percents{2.0, 5.0, 10.0, 20.0};
  std::size_t num_stages = kDefaultStages;

  // Probe used by MonitorHidden when none is supplied: trained on a fresh
  // synthetic draw of `probe_train_per_class` items per class.
  ProbeSpec probe_spec;
  std::size_t probe_train_per_class = 150;
  std::uint64_t probe_train_seed = 1;

  void validate() const;
};

struct ComparisonResult {
  EvalReport report;  // one row per (strategy, budget)
  std::vector<ReasoningTrace> traces;
};

// Runs every strategy arm of the simulated model through the online
// monitoring session. `records` supplies the prefill hidden states (one per
// item, matched by trace_id); MonitorHidden without them is a ConfigError.
ComparisonResult run_comparison(const SynthCorpus& corpus, const ComparisonConfig& cfg,
                                const std::vector<HiddenStateRecord>* records,
                                std::shared_ptr<const ProbeModel> probe = nullptr,
                                std::shared_ptr<const Matcher> matcher = nullptr);

// Simulated traces of a single arm at one budget.
std::vector<ReasoningTrace> simulate_arm(const SynthCorpus& corpus, Strategy strategy,
                                         std::size_t budget, const InterventionPolicy& policy,
                                         const std::vector<HiddenStateRecord>* records,
                                         std::shared_ptr<const Matcher> matcher,
                                         std::size_t num_stages = kDefaultStages);

// Metrics for recorded traces, grouped by strategy and context budget.
EvalReport compare_recorded(const std::vector<ReasoningTrace>& traces,
                            const Matcher* matcher = nullptr);

// Fixed-width table in the layout ACC | HA | Token/Overflow per budget, with
// changes against the Original arm in parentheses.
void write_comparison_table(std::ostream& os, const EvalReport& report);

// All metrics, one row per (strategy, budget), tab separated.
void write_report_tsv(std::ostream& os, const EvalReport& report);

}  // namespace capmon
