#include "capmon/comparison.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <set>
#include <unordered_map>

#include "capmon/errors.hpp"
#include "capmon/monitor.hpp"

namespace capmon {

void ComparisonConfig::validate() const {
  if (budgets.empty()) throw ConfigError("comparison: no context budgets");
  for (auto b : budgets)
    if (b == 0) throw ConfigError("comparison: context budgets must be positive");
  if (strategies.empty()) throw ConfigError("comparison: no strategies");
  if (detector == Detector::HiddenProbe)
    throw ConfigError("comparison: the express arm needs conf_diff or conf_curv");
  indicator.validate();
  if (num_stages < 2) throw ConfigError("comparison: num_stages must be at least 2");
}

std::vector<ReasoningTrace> simulate_arm(const SynthCorpus& corpus, Strategy strategy,
                                         std::size_t budget, const InterventionPolicy& policy,
                                         const std::vector<HiddenStateRecord>* records,
                                         std::shared_ptr<const Matcher> matcher,
                                         std::size_t num_stages) {
  if (!matcher) matcher = std::make_shared<const Matcher>(default_lexicon());
  policy.validate();

  std::unordered_map<std::string, const HiddenStateRecord*> by_id;
  if (policy.mode == PolicyMode::HiddenMonitor) {
    if (!records || records->empty())
      throw ConfigError("MonitorHidden needs hidden-state records for the corpus (none supplied)");
    for (const auto& r : *records) by_id[r.trace_id] = &r;
  }

  const std::string dataset_id = "synthetic-seed-" + std::to_string(corpus.config.seed);
  std::vector<ReasoningTrace> out;
  out.reserve(corpus.items.size());
  for (const auto& item : corpus.items) {
    MonitorSession s(item.id, item.question, policy, MonitorConfig{budget, num_stages, false},
                     matcher);
    std::optional<BoundaryVerdict> hv;
    if (policy.mode == PolicyMode::HiddenMonitor) {
      auto it = by_id.find(item.id);
      if (it == by_id.end())
        throw ConfigError("MonitorHidden: no hidden-state record for " + item.id);
      hv = predict(*policy.probe, it->second->vector);
      hv->trace_id = item.id;
    }
    Action a = s.begin(hv);
    SimRequest req = SimRequest::Original;
    if (a.kind == ActionKind::InjectSystemPrompt) req = SimRequest::BoostAbstention;
    if (a.kind == ActionKind::ForcePrefix) req = SimRequest::ForcedPrefix;

    auto chunks = simulate_stream(item, corpus.config, req, budget);
    for (std::size_t i = 0; i < chunks.size();) {
      TokenResult r = s.on_token(chunks[i++]);
      if (r.budget_reached) break;
      if (r.action.kind == ActionKind::StopAndReprompt) {
        chunks = simulate_stream(item, corpus.config, SimRequest::Reprompt, s.remaining_budget());
        i = 0;
      }
    }
    s.finish();
    ReasoningTrace t = s.to_trace(strategy, "simulated", dataset_id);
    t.gold_answer = item.gold_answer;
    t.label = item.label;
    out.push_back(std::move(t));
  }
  return out;
}

ComparisonResult run_comparison(const SynthCorpus& corpus, const ComparisonConfig& cfg,
                                const std::vector<HiddenStateRecord>* records,
                                std::shared_ptr<const ProbeModel> probe,
                                std::shared_ptr<const Matcher> matcher) {
  cfg.validate();
  if (!matcher) matcher = std::make_shared<const Matcher>(default_lexicon());
  const bool wants_hidden = std::find(cfg.strategies.begin(), cfg.strategies.end(),
                                      Strategy::MonitorHidden) != cfg.strategies.end();
  if (wants_hidden) {
    if (!records || records->empty())
      throw ConfigError(
          "MonitorHidden needs hidden-state records for the corpus (none supplied)");
    if (!probe)
      probe = std::make_shared<const ProbeModel>(fit_probe(
          synth_hidden_states(corpus.config, cfg.probe_train_per_class, cfg.probe_train_seed),
          cfg.probe_spec));
    if (probe->dim() != records->front().vector.size())
      throw ConfigError("MonitorHidden: probe dimension " + std::to_string(probe->dim()) +
                        " does not match records (" +
                        std::to_string(records->front().vector.size()) + ")");
  }

  ComparisonResult res;
  for (std::size_t budget : cfg.budgets) {
    for (Strategy s : cfg.strategies) {
      InterventionPolicy pol;
      pol.detector = cfg.detector;
      pol.indicator = cfg.indicator;
      pol.decision_stage_percents = cfg.decision_stage_percents;
      switch (s) {
        case Strategy::Original: pol.mode = PolicyMode::None; break;
        case Strategy::BoostAbstention: pol.mode = PolicyMode::BoostAbstention; break;
        case Strategy::MonitorExpress: pol.mode = PolicyMode::ExpressMonitor; break;
        case Strategy::MonitorHidden:
          pol.mode = PolicyMode::HiddenMonitor;
          pol.probe = probe;
          break;
      }
      auto traces = simulate_arm(corpus, s, budget, pol, records, matcher, cfg.num_stages);
      EvalReport rep = compute_metrics(traces, budget, matcher.get());
      res.report.rows.insert(res.report.rows.end(), rep.rows.begin(), rep.rows.end());
      res.traces.insert(res.traces.end(), std::make_move_iterator(traces.begin()),
                        std::make_move_iterator(traces.end()));
    }
  }
  auto& c = res.report.config;
  std::string budgets;
  for (auto b : cfg.budgets) budgets += (budgets.empty() ? "" : ",") + std::to_string(b);
  c["context_budgets"] = budgets;
  c["detector"] = std::string(to_string(cfg.detector));
  c["alpha"] = std::to_string(cfg.indicator.alpha);
  c["beta"] = std::to_string(cfg.indicator.beta);
  std::string stages;
  for (auto s : cfg.decision_stage_percents) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", s);
    stages += (stages.empty() ? "" : ",") + std::string(buf);
  }
  c["decision_stages"] = stages;
  c["seed"] = std::to_string(corpus.config.seed);
  c["items"] = std::to_string(corpus.items.size());
  if (wants_hidden) {
    c["probe"] = std::string(to_string(probe->kind));
    c["probe_train_seed"] = std::to_string(cfg.probe_train_seed);
  }
  return res;
}

EvalReport compare_recorded(const std::vector<ReasoningTrace>& traces, const Matcher* matcher) {
  if (traces.empty()) throw ValidationError("compare: no traces");
  std::map<std::size_t, std::vector<ReasoningTrace>> by_budget;
  for (const auto& t : traces) by_budget[t.context_budget].push_back(t);
  EvalReport rep;
  for (const auto& [budget, group] : by_budget) {
    EvalReport r = compute_metrics(group, budget, matcher);
    rep.rows.insert(rep.rows.end(), r.rows.begin(), r.rows.end());
  }
  return rep;
}

namespace {

std::string fmt(const std::optional<double>& v, const char* spec) {
  if (!v) return "n/a";
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, *v);
  return buf;
}

std::string delta(const std::optional<double>& v, const std::optional<double>& base) {
  if (!v || !base) return "";
  char buf[64];
  std::snprintf(buf, sizeof buf, " (%+.1f)", *v - *base);
  return buf;
}

std::string pct_reduction(const std::optional<double>& v, const std::optional<double>& base) {
  auto r = reduction_percent(v, base);
  if (!r) return "";
  char buf[64];
  std::snprintf(buf, sizeof buf, " (-%.1f%%)", *r);
  return buf;
}

std::vector<std::size_t> budgets_of(const EvalReport& rep) {
  std::set<std::size_t> b;
  for (const auto& r : rep.rows) b.insert(r.context_budget);
  return {b.begin(), b.end()};
}

std::vector<Strategy> strategies_of(const EvalReport& rep) {
  std::set<Strategy> s;
  for (const auto& r : rep.rows) s.insert(r.strategy);
  return {s.begin(), s.end()};
}

std::string pad(const std::string& s, std::size_t w) {
  return s.size() >= w ? s + " " : s + std::string(w - s.size(), ' ');
}

}  // namespace

void write_comparison_table(std::ostream& os, const EvalReport& report) {
  auto budgets = budgets_of(report);
  auto strategies = strategies_of(report);
  if (budgets.empty()) return;
  const std::size_t w0 = 18, w = 22;
  os << pad("Strategy", w0) << pad("ACC (%)", w) << pad("HA (%)", w);
  for (auto b : budgets)
    os << pad("Token@" + std::to_string(b), w) << pad("Overflow@" + std::to_string(b), w);
  os << '\n';
  for (Strategy s : strategies) {
    const MetricsRow* first = report.find(s, budgets.front());
    const MetricsRow* base0 = report.find(Strategy::Original, budgets.front());
    bool is_base = s == Strategy::Original;
    std::string name = is_base ? std::string(to_string(s)) : "+" + std::string(to_string(s));
    os << pad(name, w0);
    if (first) {
      std::optional<double> acc = first->acc;
      std::optional<double> base_acc;
      if (base0 && !is_base) base_acc = base0->acc;
      os << pad(fmt(acc, "%.1f") + delta(acc, base_acc), w);
      os << pad(fmt(first->ha, "%.1f") +
                    (base0 && !is_base ? delta(first->ha, base0->ha) : std::string()),
                w);
    } else {
      os << pad("-", w) << pad("-", w);
    }
    for (auto b : budgets) {
      const MetricsRow* r = report.find(s, b);
      const MetricsRow* base = report.find(Strategy::Original, b);
      if (!r) {
        os << pad("-", w) << pad("-", w);
        continue;
      }
      bool show = base && !is_base;
      os << pad(fmt(r->token_mean, "%.0f") +
                    (show ? pct_reduction(r->token_mean, base->token_mean) : std::string()),
                w);
      os << pad(fmt(r->overflow, "%.1f") +
                    (show ? delta(r->overflow, base->overflow) : std::string()),
                w);
    }
    os << '\n';
  }
}

void write_report_tsv(std::ostream& os, const EvalReport& report) {
  os << "strategy\tcontext_budget\tn\tcorrect\tincorrect\tabstained\toverflowed\tacc\tha\t"
        "token_mean\ttoken_median\toverflow\tcan\tcannot\tacc_delta\tha_delta\t"
        "token_reduction\toverflow_delta\n";
  for (const auto& r : report.rows) {
    const MetricsRow* base = report.find(Strategy::Original, r.context_budget);
    auto d = [&](const std::optional<double>& v, const std::optional<double>& b) {
      if (!base || !v || !b) return std::string("n/a");
      return fmt(*v - *b, "%.4f");
    };
    os << to_string(r.strategy) << '\t' << r.context_budget << '\t' << r.n << '\t' << r.correct
       << '\t' << r.incorrect << '\t' << r.abstained << '\t' << r.overflowed << '\t'
       << fmt(r.acc, "%.4f") << '\t' << fmt(r.ha, "%.4f") << '\t' << fmt(r.token_mean, "%.4f")
       << '\t' << fmt(r.token_median, "%.4f") << '\t' << fmt(r.overflow, "%.4f") << '\t'
       << fmt(r.can, "%.4f") << '\t' << fmt(r.cannot, "%.4f") << '\t'
       << d(r.acc, base ? std::optional<double>(base->acc) : std::nullopt) << '\t'
       << d(r.ha, base ? base->ha : std::nullopt) << '\t'
       << (base ? fmt(reduction_percent(r.token_mean, base->token_mean), "%.4f") : "n/a") << '\t'
       << d(r.overflow, base ? base->overflow : std::nullopt) << '\n';
  }
}

}  // namespace capmon
