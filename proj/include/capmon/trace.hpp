#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "capmon/hidden_record.hpp"

namespace capmon {

enum class Strategy : std::uint8_t { Original = 0, BoostAbstention, MonitorExpress, MonitorHidden };

std::string_view to_string(Strategy s);
Strategy strategy_from_string(std::string_view s);

inline constexpr int kTraceSchemaVersion = 1;

// One question's full record as produced by a model run (or a replay).
struct ReasoningTrace {
  std::string trace_id;
  std::string question;
  std::string gold_answer;
  std::string reasoning_text;
  std::string final_answer_text;
  std::size_t total_tokens = 0;
  std::size_t context_budget = 0;
  bool overflowed = false;
  bool intervened = false;
  bool abstained = false;
  Strategy strategy = Strategy::Original;
  std::string model_id;
  std::string dataset_id;

  // Optional annotations. Not part of the invariants.
  std::optional<double> intervention_stage_percent;
  SolvabilityLabel label = SolvabilityLabel::Unknown;
  bool malformed_stream = false;
  std::string error;

  // Throws ValidationError on a broken invariant.
  void validate() const;
};

std::string trace_to_json_line(const ReasoningTrace& t);
ReasoningTrace trace_from_json(std::string_view line);

// One object per line; blank lines skipped. ParseError carries the line.
std::vector<ReasoningTrace> read_traces_jsonl(std::string_view text);
std::vector<ReasoningTrace> read_traces_file(const std::string& path);
void write_traces_file(const std::string& path, const std::vector<ReasoningTrace>& traces);
void append_trace_file(const std::string& path, const ReasoningTrace& trace);

}  // namespace capmon
