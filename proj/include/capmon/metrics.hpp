#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "capmon/grading.hpp"
#include "capmon/matcher.hpp"
#include "capmon/trace.hpp"

namespace capmon {

struct CanCannotItem {
  std::size_t confident = 0;
  std::size_t uncertain = 0;
  bool correct = false;
};

// Conditional accuracies given which expression polarity dominates. Ties are
// excluded from both; an empty conditioning set leaves the value unset.
struct CanCannot {
  std::optional<double> can;     // % correct among confident-dominant
  std::optional<double> cannot;  // % wrong among uncertain-dominant
  std::size_t confident_dominant = 0;
  std::size_t uncertain_dominant = 0;
  std::size_t ties = 0;
};

CanCannot can_cannot(const std::vector<CanCannotItem>& items);

// Counts expressions in each trace's reasoning_text and grades the answers.
CanCannot can_cannot(const std::vector<ReasoningTrace>& corpus, const Matcher& matcher);

// Grade of a trace. An `abstained` flag wins over the text.
Grade trace_grade(const ReasoningTrace& t);

struct MetricsRow {
  Strategy strategy = Strategy::Original;
  std::size_t context_budget = 0;
  std::size_t n = 0;
  std::size_t correct = 0;
  std::size_t incorrect = 0;  // not Correct, abstentions included
  std::size_t abstained = 0;  // within the incorrect subset
  std::size_t overflowed = 0; // within the incorrect subset
  std::size_t parse_failures = 0;
  std::size_t marker_mid_output = 0;

  double acc = 0.0;  // percent over all traces
  // Over the incorrect subset; unset when that subset is empty.
  std::optional<double> ha;
  std::optional<double> token_mean;
  std::optional<double> token_median;
  std::optional<double> overflow;

  std::optional<double> can;
  std::optional<double> cannot;
};

struct EvalReport {
  std::vector<MetricsRow> rows;
  std::map<std::string, std::string> config;  // echoed run parameters

  const MetricsRow* find(Strategy s, std::size_t budget) const;
};

// One row per strategy present in `corpus`, in Strategy order. Throws
// ValidationError for an empty corpus or a trace whose budget differs from
// `context_budget`. Can/Cannot are filled when a matcher is given.
EvalReport compute_metrics(const std::vector<ReasoningTrace>& corpus, std::size_t context_budget,
                           const Matcher* matcher = nullptr);

// Percent reduction of `value` relative to `baseline`.
std::optional<double> reduction_percent(const std::optional<double>& value,
                                        const std::optional<double>& baseline);

}  // namespace capmon
