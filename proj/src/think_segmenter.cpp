#include "capmon/think_segmenter.hpp"

#include <algorithm>

namespace capmon {

namespace {

constexpr std::string_view kOpen = "<think>";
constexpr std::string_view kClose = "</think>";

// Length of the longest suffix of `s` that is a proper prefix of `delim`.
std::size_t partial_suffix(std::string_view s, std::string_view delim) {
  std::size_t max = std::min(s.size(), delim.size() - 1);
  for (std::size_t len = max; len > 0; --len)
    if (s.substr(s.size() - len) == delim.substr(0, len)) return len;
  return 0;
}

}  // namespace

SegmentKind ThinkSegmenter::current_kind() const {
  if (malformed_) return SegmentKind::Thinking;
  switch (state_) {
    case State::Start: return implicit_ ? SegmentKind::Thinking : SegmentKind::Outside;
    case State::Thinking: return SegmentKind::Thinking;
    case State::Answer: return SegmentKind::Answer;
  }
  return SegmentKind::Thinking;
}

void ThinkSegmenter::emit(std::vector<Segment>& out, std::string_view text) const {
  if (text.empty()) return;
  SegmentKind k = current_kind();
  if (!out.empty() && out.back().kind == k)
    out.back().text += text;
  else
    out.push_back({k, std::string(text)});
}

std::vector<Segment> ThinkSegmenter::feed(std::string_view chunk) {
  std::vector<Segment> out;
  std::string buf = std::move(held_);
  held_.clear();
  buf += chunk;
  std::string_view rest = buf;

  while (!rest.empty()) {
    if (state_ == State::Answer || malformed_) {
      // Only a stray close delimiter is still consumed in conservative mode.
      if (malformed_) {
        auto p = rest.find(kClose);
        if (p != std::string_view::npos) {
          emit(out, rest.substr(0, p));
          rest.remove_prefix(p + kClose.size());
          continue;
        }
        std::size_t keep = partial_suffix(rest, kClose);
        emit(out, rest.substr(0, rest.size() - keep));
        held_ = std::string(rest.substr(rest.size() - keep));
      } else {
        emit(out, rest);
      }
      return out;
    }

    const bool looking_for_open = state_ == State::Start;
    auto pc = rest.find(kClose);
    auto po = looking_for_open ? rest.find(kOpen) : std::string_view::npos;

    if (po != std::string_view::npos && (pc == std::string_view::npos || po < pc)) {
      emit(out, rest.substr(0, po));
      rest.remove_prefix(po + kOpen.size());
      state_ = State::Thinking;
      saw_open_ = true;
      continue;
    }
    if (pc != std::string_view::npos) {
      emit(out, rest.substr(0, pc));
      rest.remove_prefix(pc + kClose.size());
      if (state_ == State::Start)
        malformed_ = true;
      else
        state_ = State::Answer;
      continue;
    }
    std::size_t keep = partial_suffix(rest, kClose);
    if (looking_for_open) keep = std::max(keep, partial_suffix(rest, kOpen));
    emit(out, rest.substr(0, rest.size() - keep));
    held_ = std::string(rest.substr(rest.size() - keep));
    return out;
  }
  return out;
}

std::vector<Segment> ThinkSegmenter::finish() {
  std::vector<Segment> out;
  emit(out, held_);
  held_.clear();
  return out;
}

}  // namespace capmon
