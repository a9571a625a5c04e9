#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "capmon/indicators.hpp"

namespace capmon {

struct ProbeModel;

enum class PolicyMode : std::uint8_t { None = 0, ExpressMonitor, HiddenMonitor, BoostAbstention };

std::string_view to_string(PolicyMode m);
PolicyMode policy_mode_from_string(std::string_view s);

enum class ActionKind : std::uint8_t { Continue = 0, StopAndReprompt, ForcePrefix, InjectSystemPrompt };

std::string_view to_string(ActionKind k);

struct Action {
  ActionKind kind = ActionKind::Continue;
  std::string payload;  // template text; empty for Continue

  friend bool operator==(const Action&, const Action&) = default;
};

struct InterventionPolicy {
  PolicyMode mode = PolicyMode::None;
  Detector detector = Detector::ConfDiff;  // ExpressMonitor: ConfDiff or ConfCurv
  IndicatorConfig indicator;
  std::vector<double> decision_stage_percents{2.0, 5.0, 10.0, 20.0};
  std::shared_ptr<const ProbeModel> probe;  // HiddenMonitor
  int max_interventions = 1;

  void validate() const;
};

// Templates. Byte-identical to data/templates/*.txt (UTF-8, no trailing newline).
std::string_view reprompt_suffix();
std::string_view output_prefix();
std::string_view boost_abstention_prompt();

// question + "\n" + suffix.
std::string render_reprompt(std::string_view question);

// Inverse of render_reprompt; nullopt if `text` does not end with "\n" + suffix.
std::optional<std::string> strip_reprompt(std::string_view text);

std::string render_output_prefix();

// Maps a verdict to an action under `policy`. Throws ConfigError when the
// verdict's detector does not belong to the policy's mode.
Action decide(const BoundaryVerdict& verdict, const InterventionPolicy& policy,
              bool already_intervened);

// Session-start action: InjectSystemPrompt for BoostAbstention, else Continue.
Action session_start_action(const InterventionPolicy& policy);

// Per-session wrapper enforcing the one-shot rule across a verdict sequence.
class InterventionTracker {
 public:
  explicit InterventionTracker(const InterventionPolicy& policy) : policy_(&policy) {}

  Action start();
  Action on_verdict(const BoundaryVerdict& verdict);

  bool intervened() const noexcept { return interventions_ > 0; }
  int interventions() const noexcept { return interventions_; }
  std::size_t injected_bytes() const noexcept { return injected_bytes_; }

 private:
  const InterventionPolicy* policy_;
  int interventions_ = 0;
  bool started_ = false;
  std::size_t injected_bytes_ = 0;
};

}  // namespace capmon
