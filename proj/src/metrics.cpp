#include "capmon/metrics.hpp"

#include <algorithm>

#include "capmon/errors.hpp"
#include "capmon/tokenizer.hpp"

namespace capmon {

CanCannot can_cannot(const std::vector<CanCannotItem>& items) {
  CanCannot r;
  std::size_t can_hits = 0, cannot_hits = 0;
  for (const auto& it : items) {
    if (it.confident > it.uncertain) {
      ++r.confident_dominant;
      if (it.correct) ++can_hits;
    } else if (it.uncertain > it.confident) {
      ++r.uncertain_dominant;
      if (!it.correct) ++cannot_hits;
    } else {
      ++r.ties;
    }
  }
  if (r.confident_dominant)
    r.can = 100.0 * static_cast<double>(can_hits) / static_cast<double>(r.confident_dominant);
  if (r.uncertain_dominant)
    r.cannot =
        100.0 * static_cast<double>(cannot_hits) / static_cast<double>(r.uncertain_dominant);
  return r;
}

Grade trace_grade(const ReasoningTrace& t) {
  if (t.abstained) return Grade::Abstained;
  return grade_answer(t.final_answer_text, t.gold_answer).grade;
}

CanCannot can_cannot(const std::vector<ReasoningTrace>& corpus, const Matcher& matcher) {
  std::vector<CanCannotItem> items;
  items.reserve(corpus.size());
  for (const auto& t : corpus) {
    CanCannotItem it;
    for (const auto& ev : matcher.match(tokenize(t.reasoning_text)))
      (ev.polarity == Polarity::Confident ? it.confident : it.uncertain)++;
    it.correct = trace_grade(t) == Grade::Correct;
    items.push_back(it);
  }
  return can_cannot(items);
}

const MetricsRow* EvalReport::find(Strategy s, std::size_t budget) const {
  for (const auto& r : rows)
    if (r.strategy == s && r.context_budget == budget) return &r;
  return nullptr;
}

namespace {

MetricsRow metrics_for(const std::vector<const ReasoningTrace*>& traces, std::size_t budget,
                       const Matcher* matcher) {
  MetricsRow row;
  row.strategy = traces.front()->strategy;
  row.context_budget = budget;
  row.n = traces.size();
  std::vector<double> tokens;
  std::vector<ReasoningTrace> copies;
  for (const auto* t : traces) {
    GradeResult g = t->abstained ? GradeResult{Grade::Abstained, {}, false, false}
                                 : grade_answer(t->final_answer_text, t->gold_answer);
    if (g.parse_failure) ++row.parse_failures;
    if (g.marker_mid_output) ++row.marker_mid_output;
    if (g.grade == Grade::Correct) {
      ++row.correct;
    } else {
      ++row.incorrect;
      if (g.grade == Grade::Abstained) ++row.abstained;
      if (t->overflowed) ++row.overflowed;
      tokens.push_back(static_cast<double>(t->total_tokens));
    }
    if (matcher) copies.push_back(*t);
  }
  row.acc = 100.0 * static_cast<double>(row.correct) / static_cast<double>(row.n);
  if (row.incorrect) {
    double m = static_cast<double>(row.incorrect);
    row.ha = 100.0 * static_cast<double>(row.abstained) / m;
    row.overflow = 100.0 * static_cast<double>(row.overflowed) / m;
    double sum = 0.0;
    for (double x : tokens) sum += x;
    row.token_mean = sum / m;
    std::sort(tokens.begin(), tokens.end());
    std::size_t k = tokens.size();
    row.token_median = k % 2 ? tokens[k / 2] : 0.5 * (tokens[k / 2 - 1] + tokens[k / 2]);
  }
  if (matcher) {
    CanCannot cc = can_cannot(copies, *matcher);
    row.can = cc.can;
    row.cannot = cc.cannot;
  }
  return row;
}

}  // namespace

EvalReport compute_metrics(const std::vector<ReasoningTrace>& corpus, std::size_t context_budget,
                           const Matcher* matcher) {
  if (corpus.empty()) throw ValidationError("compute_metrics: empty corpus");
  std::map<Strategy, std::vector<const ReasoningTrace*>> groups;
  for (const auto& t : corpus) {
    t.validate();
    if (t.context_budget != 0 && t.context_budget != context_budget)
      throw ValidationError("compute_metrics: trace " + t.trace_id + " has context budget " +
                            std::to_string(t.context_budget) + ", expected " +
                            std::to_string(context_budget));
    groups[t.strategy].push_back(&t);
  }
  EvalReport rep;
  for (const auto& [s, traces] : groups) rep.rows.push_back(metrics_for(traces, context_budget, matcher));
  rep.config["context_budget"] = std::to_string(context_budget);
  return rep;
}

std::optional<double> reduction_percent(const std::optional<double>& value,
                                        const std::optional<double>& baseline) {
  if (!value || !baseline || *baseline == 0.0) return std::nullopt;
  return 100.0 * (1.0 - *value / *baseline);
}

}  // namespace capmon
