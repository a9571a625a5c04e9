#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "capmon/indicators.hpp"
#include "capmon/intervention.hpp"
#include "capmon/matcher.hpp"
#include "capmon/think_segmenter.hpp"
#include "capmon/tokenizer.hpp"
#include "capmon/trace.hpp"
#include "capmon/trajectory.hpp"

namespace capmon {

enum class SessionPhase : std::uint8_t { Prefill, Thinking, Answering, Intervened, Done, Overflowed };

std::string_view to_string(SessionPhase p);

struct MonitorConfig {
  std::size_t context_budget = 4096;
  std::size_t num_stages = kDefaultStages;
  bool implicit_thinking = false;

  void validate() const;
};

// Total trace length assumed at an online checkpoint: the toolkit tokens seen
// so far are taken to be `stage_percent` percent of the trace.
std::size_t provisional_total(std::size_t toolkit_tokens, double stage_percent);

// True once `tokens_emitted` has reached `stage_percent` percent of `budget`.
bool checkpoint_reached(std::size_t tokens_emitted, std::size_t budget, double stage_percent);

struct CheckpointRecord {
  double stage_percent = 0.0;
  std::size_t tokens_emitted = 0;
  std::size_t toolkit_tokens = 0;
  std::optional<BoundaryVerdict> verdict;
  std::string skipped;  // reason when no verdict was computed
};

struct TokenResult {
  Action action;
  bool budget_reached = false;
};

// Per-session monitoring engine, independent of any transport. Feed each
// generated model token (one streamed content delta) through on_token().
//
// Before the first token call begin(); under HiddenMonitor pass the probe
// verdict obtained at prefill. A StopAndReprompt action moves the session to
// Intervened: the caller discards the rest of the current generation and
// streams the reprompted response through on_token() as well, within the
// same budget.
class MonitorSession {
 public:
  MonitorSession(std::string trace_id, std::string question, const InterventionPolicy& policy,
                 MonitorConfig config, std::shared_ptr<const Matcher> matcher);

  Action begin(const std::optional<BoundaryVerdict>& hidden_verdict = std::nullopt);
  TokenResult on_token(std::string_view text);

  // Generation ended. An exhausted budget without intervention is Overflowed.
  void finish();
  // Ends the session after an upstream failure.
  void fail(std::string message);

  SessionPhase phase() const noexcept { return phase_; }
  bool intervened() const noexcept { return tracker_.intervened(); }
  std::size_t tokens_emitted() const noexcept { return tokens_emitted_; }
  std::size_t remaining_budget() const noexcept { return config_.context_budget - tokens_emitted_; }
  std::size_t context_budget() const noexcept { return config_.context_budget; }
  bool malformed() const noexcept { return segmenter_.malformed(); }
  const std::vector<CheckpointRecord>& checkpoints() const noexcept { return checkpoints_; }
  std::optional<double> intervention_stage() const noexcept { return intervention_stage_; }
  const std::string& question() const noexcept { return question_; }

  // Toolkit tokens routed to the matcher so far (thinking text only).
  std::size_t monitored_tokens() const noexcept { return monitored_tokens_; }

  const std::string& thinking_text() const noexcept { return thinking_; }
  const std::string& answer_text() const noexcept { return answer_; }

  // Events released so far plus those still pending in the matcher.
  std::vector<ExpressionEvent> current_events() const;

  ReasoningTrace to_trace(Strategy strategy, std::string model_id = {},
                          std::string dataset_id = {}) const;

 private:
  void route(const std::vector<Segment>& segs);
  void replay_outside();
  void monitor_text(std::string_view text);
  void push_tokens(std::vector<std::string>& toks);
  std::optional<Action> run_checkpoints();

  std::string trace_id_;
  std::string question_;
  const InterventionPolicy* policy_;
  MonitorConfig config_;

  ThinkSegmenter segmenter_;
  ThinkSegmenter reprompt_segmenter_;
  StreamingTokenizer tokenizer_;
  IncrementalMatcher matcher_;
  TrajectoryBuilder builder_;
  InterventionTracker tracker_;

  SessionPhase phase_ = SessionPhase::Prefill;
  bool begun_ = false;
  bool forced_prefix_ = false;
  bool reprompting_ = false;
  bool outside_replayed_ = false;
  std::size_t tokens_emitted_ = 0;
  std::size_t monitored_tokens_ = 0;
  std::size_t next_checkpoint_ = 0;
  std::vector<CheckpointRecord> checkpoints_;
  std::optional<double> intervention_stage_;

  std::string outside_;
  std::string thinking_;
  std::string answer_;
  std::string reprompt_thinking_;
  std::string error_;
};

}  // namespace capmon
