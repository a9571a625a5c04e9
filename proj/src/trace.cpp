#include "capmon/trace.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "capmon/errors.hpp"

namespace capmon {

using nlohmann::json;

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::Original: return "Original";
    case Strategy::BoostAbstention: return "BoostAbstention";
    case Strategy::MonitorExpress: return "MonitorExpress";
    case Strategy::MonitorHidden: return "MonitorHidden";
  }
  return "Original";
}

Strategy strategy_from_string(std::string_view s) {
  if (s == "Original" || s == "original") return Strategy::Original;
  if (s == "BoostAbstention" || s == "boost_abstention" || s == "boost")
    return Strategy::BoostAbstention;
  if (s == "MonitorExpress" || s == "monitor_express" || s == "express")
    return Strategy::MonitorExpress;
  if (s == "MonitorHidden" || s == "monitor_hidden" || s == "hidden")
    return Strategy::MonitorHidden;
  throw ValidationError("unknown strategy \"" + std::string(s) + "\"");
}

void ReasoningTrace::validate() const {
  if (trace_id.empty()) throw ValidationError("trace: empty trace_id");
  if (context_budget > 0 && total_tokens > context_budget)
    throw ValidationError("trace " + trace_id + ": total_tokens exceeds context_budget");
  if (overflowed && total_tokens != context_budget)
    throw ValidationError("trace " + trace_id + ": overflowed but total_tokens != context_budget");
  if (abstained && final_answer_text.find("\\boxed{") != std::string::npos)
    throw ValidationError("trace " + trace_id + ": abstained trace carries a boxed answer");
}

std::string trace_to_json_line(const ReasoningTrace& t) {
  json j;
  j["schema"] = kTraceSchemaVersion;
  j["trace_id"] = t.trace_id;
  j["question"] = t.question;
  j["gold_answer"] = t.gold_answer;
  j["reasoning_text"] = t.reasoning_text;
  j["final_answer_text"] = t.final_answer_text;
  j["total_tokens"] = t.total_tokens;
  j["context_budget"] = t.context_budget;
  j["overflowed"] = t.overflowed;
  j["intervened"] = t.intervened;
  j["abstained"] = t.abstained;
  j["strategy"] = std::string(to_string(t.strategy));
  j["model_id"] = t.model_id;
  j["dataset_id"] = t.dataset_id;
  if (t.intervention_stage_percent) j["intervention_stage_percent"] = *t.intervention_stage_percent;
  if (t.label != SolvabilityLabel::Unknown) j["label"] = std::string(to_string(t.label));
  if (t.malformed_stream) j["malformed_stream"] = true;
  if (!t.error.empty()) j["error"] = t.error;
  return j.dump();
}

namespace {

ReasoningTrace trace_from_object(const json& j) {
  ReasoningTrace t;
  int schema = j.value("schema", kTraceSchemaVersion);
  if (schema != kTraceSchemaVersion)
    throw ValidationError("trace: unsupported schema " + std::to_string(schema));
  t.trace_id = j.at("trace_id").get<std::string>();
  t.question = j.value("question", std::string{});
  t.gold_answer = j.value("gold_answer", std::string{});
  t.reasoning_text = j.value("reasoning_text", std::string{});
  t.final_answer_text = j.value("final_answer_text", std::string{});
  t.total_tokens = j.at("total_tokens").get<std::size_t>();
  t.context_budget = j.value("context_budget", std::size_t{0});
  t.overflowed = j.value("overflowed", false);
  t.intervened = j.value("intervened", false);
  t.abstained = j.value("abstained", false);
  t.strategy = strategy_from_string(j.value("strategy", std::string("Original")));
  t.model_id = j.value("model_id", std::string{});
  t.dataset_id = j.value("dataset_id", std::string{});
  if (j.contains("intervention_stage_percent") && !j["intervention_stage_percent"].is_null())
    t.intervention_stage_percent = j["intervention_stage_percent"].get<double>();
  if (j.contains("label")) t.label = label_from_string(j["label"].get<std::string>());
  t.malformed_stream = j.value("malformed_stream", false);
  t.error = j.value("error", std::string{});
  return t;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<ReasoningTrace> read_lines(std::string_view text, const std::string* base_dir) {
  std::vector<ReasoningTrace> out;
  std::size_t line_no = 0, start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    ++line_no;
    auto line = text.substr(start, end - start);
    start = end + 1;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    try {
      json j = json::parse(line.begin(), line.end());
      ReasoningTrace t = trace_from_object(j);
      if (j.contains("reasoning_text_path")) {
        std::filesystem::path p = j["reasoning_text_path"].get<std::string>();
        if (p.is_relative() && base_dir) p = std::filesystem::path(*base_dir) / p;
        t.reasoning_text = slurp(p.string());
      }
      t.validate();
      out.push_back(std::move(t));
    } catch (const json::exception& e) {
      throw ParseError(std::string("trace: ") + e.what(), line_no);
    } catch (const ValidationError& e) {
      throw ParseError(e.what(), line_no);
    } catch (const ConfigError& e) {
      throw ParseError(e.what(), line_no);
    }
  }
  return out;
}

}  // namespace

ReasoningTrace trace_from_json(std::string_view line) {
  try {
    return trace_from_object(json::parse(line.begin(), line.end()));
  } catch (const json::exception& e) {
    throw ValidationError(std::string("trace: ") + e.what());
  }
}

std::vector<ReasoningTrace> read_traces_jsonl(std::string_view text) {
  return read_lines(text, nullptr);
}

std::vector<ReasoningTrace> read_traces_file(const std::string& path) {
  auto text = slurp(path);
  std::string dir = std::filesystem::path(path).parent_path().string();
  return read_lines(text, &dir);
}

void write_traces_file(const std::string& path, const std::vector<ReasoningTrace>& traces) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path);
  for (const auto& t : traces) out << trace_to_json_line(t) << '\n';
}

void append_trace_file(const std::string& path, const ReasoningTrace& trace) {
  std::ofstream out(path, std::ios::binary | std::ios::app);
  if (!out) throw ConfigError("cannot write " + path);
  out << trace_to_json_line(trace) << '\n';
}

}  // namespace capmon
