#include "capmon/grading.hpp"

#include <algorithm>
#include <cctype>
#include <regex>

namespace capmon {

std::string_view to_string(Grade g) {
  switch (g) {
    case Grade::Correct: return "correct";
    case Grade::Wrong: return "wrong";
    case Grade::Abstained: return "abstained";
  }
  return "wrong";
}

namespace {

std::string_view trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

bool starts_with_marker(std::string_view s) {
  for (auto m : kAbstentionMarkers)
    if (s.substr(0, m.size()) == m) return true;
  return false;
}

bool contains_marker(std::string_view s) {
  for (auto m : kAbstentionMarkers)
    if (s.find(m) != std::string_view::npos) return true;
  return false;
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace

ExtractedAnswer extract_answer(std::string_view output) {
  constexpr std::string_view kBoxed = "\\boxed{";
  auto pos = output.rfind(kBoxed);
  if (pos != std::string_view::npos) {
    std::size_t i = pos + kBoxed.size();
    int depth = 1;
    std::size_t j = i;
    for (; j < output.size(); ++j) {
      if (output[j] == '{') ++depth;
      if (output[j] == '}' && --depth == 0) break;
    }
    if (depth == 0) return {std::string(output.substr(i, j - i)), true};
  }

  std::string_view body = trim(output);
  if (body.empty()) return {};
  auto nl = body.rfind('\n');
  std::string_view line = trim(nl == std::string_view::npos ? body : body.substr(nl + 1));
  std::string low = lower(line);
  std::size_t cut = std::string::npos;
  for (std::string_view key : {"answer is", "answer:"}) {
    auto p = low.rfind(key);
    if (p != std::string::npos && (cut == std::string::npos || p + key.size() > cut))
      cut = p + key.size();
  }
  if (cut != std::string::npos) line = trim(line.substr(cut));
  return {std::string(line), false};
}

std::string normalize_answer(std::string_view answer) {
  std::string_view s = trim(answer);
  while (!s.empty() && (s.front() == '$' || s.back() == '$' || s.back() == '.')) {
    if (s.front() == '$') s.remove_prefix(1);
    if (!s.empty() && (s.back() == '$' || s.back() == '.')) s.remove_suffix(1);
    s = trim(s);
  }

  static const std::regex num(R"(^([+-]?)(\d{1,3}(?:,\d{3})+|\d+)(?:\.(\d+))?$)");
  std::string str(s);
  std::smatch m;
  if (std::regex_match(str, m, num)) {
    std::string ip = m[2].str();
    ip.erase(std::remove(ip.begin(), ip.end(), ','), ip.end());
    ip.erase(0, std::min(ip.find_first_not_of('0'), ip.size() - 1));
    std::string fp = m[3].str();
    while (!fp.empty() && fp.back() == '0') fp.pop_back();
    std::string out = ip;
    if (!fp.empty()) out += "." + fp;
    if (m[1] == "-" && out != "0") out.insert(0, "-");
    return out;
  }
  std::string out;
  for (char c : str)
    if (!std::isspace(static_cast<unsigned char>(c)))
      out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  return out;
}

bool is_abstention(std::string_view output) {
  std::string_view s = trim(output);
  constexpr std::string_view kOpen = "<think>";
  if (s.substr(0, kOpen.size()) == kOpen) s = trim(s.substr(kOpen.size()));
  return starts_with_marker(s);
}

GradeResult grade_answer(std::string_view final_answer_text, std::string_view gold_answer) {
  GradeResult r;
  if (is_abstention(final_answer_text)) {
    r.grade = Grade::Abstained;
    return r;
  }
  ExtractedAnswer a = extract_answer(final_answer_text);
  r.marker_mid_output = contains_marker(final_answer_text);
  if (r.marker_mid_output && !a.boxed) {
    r.grade = Grade::Abstained;
    return r;
  }
  r.extracted = normalize_answer(a.text);
  if (r.extracted.empty()) {
    r.parse_failure = true;
    r.grade = Grade::Wrong;
    return r;
  }
  std::string gold = normalize_answer(gold_answer);
  r.grade = (!gold.empty() && gold == r.extracted) ? Grade::Correct : Grade::Wrong;
  return r;
}

}  // namespace capmon
