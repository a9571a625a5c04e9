#include "capmon/intervention.hpp"

#include "capmon/errors.hpp"

namespace capmon {

namespace {

constexpr std::string_view kSuffix =
    "The above question is beyond your capability boundary. Do not solve the question, just "
    "provide a concise potential approach of less than 5 steps:";

constexpr std::string_view kPrefix =
    "<think>\n"
    "I think this question is beyond my capability boundary. I cannot fully solve it, but I can "
    "outline a concise potential approach. I must give a concise outline to the user (less than "
    "10 steps)!\n"
    "</think>\n"
    "This question is beyond my capability boundary, but I can outline a concise potential "
    "approach:";

constexpr std::string_view kBoost =
    "You are a helpful assistant specialized in solving math problems.\n"
    "\n"
    "However, some problems may be too complex or beyond your capability. In such cases:\n"
    "- Admit that you cannot fully solve the problem.\n"
    "- Provide a concise potential approach, outline, or next step instead of a detailed "
    "solution.\n"
    "- Avoid spending too much time on overly difficult problems, as this increases latency "
    "for the user.";

}  // namespace

std::string_view to_string(PolicyMode m) {
  switch (m) {
    case PolicyMode::None: return "none";
    case PolicyMode::ExpressMonitor: return "express_monitor";
    case PolicyMode::HiddenMonitor: return "hidden_monitor";
    case PolicyMode::BoostAbstention: return "boost_abstention";
  }
  return "none";
}

PolicyMode policy_mode_from_string(std::string_view s) {
  if (s == "none" || s == "original") return PolicyMode::None;
  if (s == "express_monitor" || s == "express") return PolicyMode::ExpressMonitor;
  if (s == "hidden_monitor" || s == "hidden") return PolicyMode::HiddenMonitor;
  if (s == "boost_abstention" || s == "boost") return PolicyMode::BoostAbstention;
  throw ConfigError("unknown policy mode \"" + std::string(s) + "\"");
}

std::string_view to_string(ActionKind k) {
  switch (k) {
    case ActionKind::Continue: return "continue";
    case ActionKind::StopAndReprompt: return "stop_and_reprompt";
    case ActionKind::ForcePrefix: return "force_prefix";
    case ActionKind::InjectSystemPrompt: return "inject_system_prompt";
  }
  return "continue";
}

void InterventionPolicy::validate() const {
  indicator.validate();
  if (max_interventions != 1) throw ConfigError("policy: max_interventions must be 1");
  double prev = 0.0;
  for (double s : decision_stage_percents) {
    if (!(s > prev && s <= 100.0))
      throw ConfigError("policy: decision stages must be strictly increasing in (0, 100]");
    prev = s;
  }
  if (mode == PolicyMode::ExpressMonitor) {
    if (detector == Detector::HiddenProbe)
      throw ConfigError("policy: express_monitor needs a trajectory detector");
    if (decision_stage_percents.empty())
      throw ConfigError("policy: express_monitor needs at least one decision stage");
  }
  if (mode == PolicyMode::HiddenMonitor && !probe)
    throw ConfigError("policy: hidden_monitor needs a probe model");
}

std::string_view reprompt_suffix() { return kSuffix; }
std::string_view output_prefix() { return kPrefix; }
std::string_view boost_abstention_prompt() { return kBoost; }

std::string render_reprompt(std::string_view question) {
  std::string out(question);
  out.push_back('\n');
  out += kSuffix;
  return out;
}

std::optional<std::string> strip_reprompt(std::string_view text) {
  if (text.size() < kSuffix.size() + 1) return std::nullopt;
  auto tail = text.substr(text.size() - kSuffix.size());
  if (tail != kSuffix || text[text.size() - kSuffix.size() - 1] != '\n') return std::nullopt;
  return std::string(text.substr(0, text.size() - kSuffix.size() - 1));
}

std::string render_output_prefix() { return std::string(kPrefix); }

Action decide(const BoundaryVerdict& verdict, const InterventionPolicy& policy,
              bool already_intervened) {
  switch (policy.mode) {
    case PolicyMode::None:
      return {};
    case PolicyMode::BoostAbstention:
      if (already_intervened) return {};
      return {ActionKind::InjectSystemPrompt, std::string(kBoost)};
    case PolicyMode::ExpressMonitor:
      if (verdict.detector == Detector::HiddenProbe)
        throw ConfigError("decide: hidden_probe verdict under express_monitor");
      if (verdict.decision == Decision::Beyond && !already_intervened)
        return {ActionKind::StopAndReprompt, std::string(kSuffix)};
      return {};
    case PolicyMode::HiddenMonitor:
      if (verdict.detector != Detector::HiddenProbe)
        throw ConfigError("decide: trajectory verdict under hidden_monitor");
      if (verdict.decision == Decision::Beyond && !already_intervened)
        return {ActionKind::ForcePrefix, std::string(kPrefix)};
      return {};
  }
  return {};
}

Action session_start_action(const InterventionPolicy& policy) {
  if (policy.mode == PolicyMode::BoostAbstention)
    return {ActionKind::InjectSystemPrompt, std::string(kBoost)};
  return {};
}

Action InterventionTracker::start() {
  if (started_) return {};
  started_ = true;
  Action a = session_start_action(*policy_);
  injected_bytes_ += a.payload.size();
  return a;
}

Action InterventionTracker::on_verdict(const BoundaryVerdict& verdict) {
  if (policy_->mode == PolicyMode::BoostAbstention || policy_->mode == PolicyMode::None)
    return {};
  Action a = decide(verdict, *policy_, interventions_ >= policy_->max_interventions);
  if (a.kind != ActionKind::Continue) {
    ++interventions_;
    injected_bytes_ += a.payload.size();
  }
  return a;
}

}  // namespace capmon
