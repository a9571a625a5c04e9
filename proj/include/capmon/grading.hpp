#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace capmon {

enum class Grade : std::uint8_t { Correct = 0, Wrong, Abstained };

std::string_view to_string(Grade g);

// Sentences that mark an explicit abstention.
inline constexpr std::string_view kAbstentionMarkers[] = {
    "I think this question is beyond my capability boundary",
    "This question is beyond my capability boundary",
};

struct ExtractedAnswer {
  std::string text;  // raw answer text, empty when nothing was found
  bool boxed = false;
};

// Answer inside the last \boxed{...}; otherwise the text after the last
// "answer is" / "answer:" on the final non-empty line, or that whole line.
ExtractedAnswer extract_answer(std::string_view output);

// Trim, drop surrounding "$" and a trailing period, and put numbers in
// canonical form ("042" -> "42", "1,000" -> "1000", "2.50" -> "2.5").
// Non-numeric answers are lowercased with whitespace removed.
std::string normalize_answer(std::string_view answer);

// True when the output opens with an abstention marker, optionally inside
// a leading think block.
bool is_abstention(std::string_view output);

struct GradeResult {
  Grade grade = Grade::Wrong;
  std::string extracted;       // normalized answer
  bool parse_failure = false;  // no answer could be extracted
  bool marker_mid_output = false;
};

GradeResult grade_answer(std::string_view final_answer_text, std::string_view gold_answer);

}  // namespace capmon
