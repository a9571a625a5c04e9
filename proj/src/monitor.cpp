#include "capmon/monitor.hpp"

#include <cmath>

#include "capmon/errors.hpp"
#include "capmon/grading.hpp"

namespace capmon {

std::string_view to_string(SessionPhase p) {
  switch (p) {
    case SessionPhase::Prefill: return "prefill";
    case SessionPhase::Thinking: return "thinking";
    case SessionPhase::Answering: return "answering";
    case SessionPhase::Intervened: return "intervened";
    case SessionPhase::Done: return "done";
    case SessionPhase::Overflowed: return "overflowed";
  }
  return "done";
}

void MonitorConfig::validate() const {
  if (context_budget == 0) throw ConfigError("monitor: context_budget must be positive");
  if (num_stages < 2) throw ConfigError("monitor: num_stages must be at least 2");
}

std::size_t provisional_total(std::size_t toolkit_tokens, double stage_percent) {
  if (!(stage_percent > 0.0 && stage_percent <= 100.0))
    throw InvalidArgument("provisional_total: stage_percent outside (0, 100]");
  double t = static_cast<double>(toolkit_tokens) * 100.0 / stage_percent;
  return static_cast<std::size_t>(std::ceil(t - 1e-9));
}

bool checkpoint_reached(std::size_t tokens_emitted, std::size_t budget, double stage_percent) {
  return static_cast<double>(tokens_emitted) * 100.0 + 1e-9 >=
         stage_percent * static_cast<double>(budget);
}

MonitorSession::MonitorSession(std::string trace_id, std::string question,
                               const InterventionPolicy& policy, MonitorConfig config,
                               std::shared_ptr<const Matcher> matcher)
    : trace_id_(std::move(trace_id)),
      question_(std::move(question)),
      policy_(&policy),
      config_(config),
      segmenter_(config.implicit_thinking),
      matcher_(std::move(matcher)),
      tracker_(policy) {
  config_.validate();
}

Action MonitorSession::begin(const std::optional<BoundaryVerdict>& hidden_verdict) {
  if (begun_) throw StateError("session: begin() called twice");
  begun_ = true;
  Action a = tracker_.start();
  if (policy_->mode == PolicyMode::HiddenMonitor && hidden_verdict) {
    a = tracker_.on_verdict(*hidden_verdict);
    if (a.kind == ActionKind::ForcePrefix) {
      phase_ = SessionPhase::Intervened;
      forced_prefix_ = true;
      intervention_stage_ = 0.0;
      route(segmenter_.feed(a.payload));
    }
  }
  return a;
}

TokenResult MonitorSession::on_token(std::string_view text) {
  if (!begun_) throw StateError("session: on_token() before begin()");
  if (phase_ == SessionPhase::Done || phase_ == SessionPhase::Overflowed)
    throw ProtocolError("session: token received after the session ended");
  if (tokens_emitted_ >= config_.context_budget)
    throw ProtocolError("session: token beyond context budget");

  ++tokens_emitted_;
  if (phase_ == SessionPhase::Prefill) phase_ = SessionPhase::Thinking;

  TokenResult r;
  if (reprompting_) {
    for (auto& seg : reprompt_segmenter_.feed(text))
      (seg.kind == SegmentKind::Thinking ? reprompt_thinking_ : answer_) += seg.text;
  } else {
    route(segmenter_.feed(text));
    if (phase_ == SessionPhase::Thinking && segmenter_.in_answer()) phase_ = SessionPhase::Answering;
    if (auto a = run_checkpoints()) r.action = std::move(*a);
  }
  r.budget_reached = tokens_emitted_ == config_.context_budget;
  return r;
}

void MonitorSession::route(const std::vector<Segment>& segs) {
  for (const auto& seg : segs) {
    switch (seg.kind) {
      case SegmentKind::Outside:
        outside_ += seg.text;
        break;
      case SegmentKind::Thinking:
        if (segmenter_.malformed() && !outside_replayed_) replay_outside();
        thinking_ += seg.text;
        monitor_text(seg.text);
        break;
      case SegmentKind::Answer:
        answer_ += seg.text;
        break;
    }
  }
  // A closed thinking segment completes its partial word.
  if (segmenter_.in_answer() && tokenizer_.has_pending() && !intervened()) {
    std::vector<std::string> toks;
    tokenizer_.finish(toks);
    push_tokens(toks);
  }
  if (segmenter_.malformed() && !outside_replayed_) replay_outside();
}

void MonitorSession::replay_outside() {
  outside_replayed_ = true;
  if (outside_.empty()) return;
  thinking_.insert(0, outside_);
  monitor_text(outside_);
}

void MonitorSession::monitor_text(std::string_view text) {
  if (intervened()) return;
  std::vector<std::string> toks;
  tokenizer_.feed(text, toks);
  push_tokens(toks);
}

void MonitorSession::push_tokens(std::vector<std::string>& toks) {
  std::vector<ExpressionEvent> evs;
  for (auto& t : toks) {
    builder_.observe_tokens(1);
    ++monitored_tokens_;
    matcher_.push(std::move(t), evs);
  }
  for (const auto& e : evs) builder_.observe_event(e);
}

std::vector<ExpressionEvent> MonitorSession::current_events() const {
  IncrementalMatcher probe = matcher_;
  std::vector<ExpressionEvent> out = builder_.events();
  if (tokenizer_.has_pending()) probe.push(tokenizer_.pending(), out);
  probe.finish(out);
  return out;
}

std::optional<Action> MonitorSession::run_checkpoints() {
  if (policy_->mode != PolicyMode::ExpressMonitor || intervened()) return std::nullopt;
  const auto& stages = policy_->decision_stage_percents;
  while (next_checkpoint_ < stages.size() &&
         checkpoint_reached(tokens_emitted_, config_.context_budget, stages[next_checkpoint_])) {
    CheckpointRecord rec;
    rec.stage_percent = stages[next_checkpoint_++];
    rec.tokens_emitted = tokens_emitted_;
    rec.toolkit_tokens = monitored_tokens_ + (tokenizer_.has_pending() ? 1 : 0);

    if (phase_ != SessionPhase::Thinking) {
      rec.skipped = "not in thinking segment";
      checkpoints_.push_back(std::move(rec));
      continue;
    }
    std::size_t total = provisional_total(rec.toolkit_tokens, rec.stage_percent);
    if (total < config_.num_stages) {
      rec.skipped = "too few tokens for the stage grid";
      checkpoints_.push_back(std::move(rec));
      continue;
    }

    std::vector<ExpressionEvent> extra;
    {
      IncrementalMatcher probe = matcher_;
      if (tokenizer_.has_pending()) probe.push(tokenizer_.pending(), extra);
      probe.finish(extra);
    }
    TrajectoryPair pair = builder_.snapshot(total, config_.num_stages, extra);
    IndicatorConfig cfg = policy_->indicator;
    cfg.stage_percent = rec.stage_percent;
    try {
      BoundaryVerdict v = evaluate(policy_->detector, pair, cfg);
      v.trace_id = trace_id_;
      rec.verdict = v;
    } catch (const InsufficientData& e) {
      rec.skipped = e.what();
      checkpoints_.push_back(std::move(rec));
      continue;
    }

    Action a = tracker_.on_verdict(*rec.verdict);
    checkpoints_.push_back(std::move(rec));
    if (a.kind == ActionKind::StopAndReprompt) {
      phase_ = SessionPhase::Intervened;
      intervention_stage_ = checkpoints_.back().stage_percent;
      reprompting_ = true;
      return a;
    }
  }
  return std::nullopt;
}

void MonitorSession::finish() {
  if (phase_ == SessionPhase::Done || phase_ == SessionPhase::Overflowed) return;
  if (reprompting_) {
    for (auto& seg : reprompt_segmenter_.finish())
      (seg.kind == SegmentKind::Thinking ? reprompt_thinking_ : answer_) += seg.text;
  } else {
    route(segmenter_.finish());
    if (!intervened()) {
      std::vector<std::string> toks;
      tokenizer_.finish(toks);
      push_tokens(toks);
      std::vector<ExpressionEvent> evs;
      matcher_.finish(evs);
      for (const auto& e : evs) builder_.observe_event(e);
    }
  }
  bool cut = tokens_emitted_ == config_.context_budget;
  phase_ = (cut && !intervened() && phase_ != SessionPhase::Prefill) ? SessionPhase::Overflowed
                                                                     : SessionPhase::Done;
}

void MonitorSession::fail(std::string message) {
  error_ = std::move(message);
  phase_ = SessionPhase::Done;
}

ReasoningTrace MonitorSession::to_trace(Strategy strategy, std::string model_id,
                                        std::string dataset_id) const {
  ReasoningTrace t;
  t.trace_id = trace_id_;
  t.question = question_;
  t.reasoning_text = thinking_.empty() ? outside_ : thinking_;
  t.final_answer_text = answer_;
  if (answer_.empty() && !segmenter_.saw_open() && !segmenter_.malformed() && !reprompting_)
    t.final_answer_text = outside_;
  t.total_tokens = tokens_emitted_;
  t.context_budget = config_.context_budget;
  t.overflowed = tokens_emitted_ == config_.context_budget;
  t.intervened = intervened();
  t.abstained = grade_answer(t.final_answer_text, "").grade == Grade::Abstained;
  t.strategy = strategy;
  t.model_id = std::move(model_id);
  t.dataset_id = std::move(dataset_id);
  t.intervention_stage_percent = intervention_stage_;
  t.malformed_stream = segmenter_.malformed();
  t.error = error_;
  return t;
}

}  // namespace capmon
