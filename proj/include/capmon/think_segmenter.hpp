#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace capmon {

enum class SegmentKind : std::uint8_t { Outside = 0, Thinking = 1, Answer = 2 };

struct Segment {
  SegmentKind kind;
  std::string text;
};

// Splits a streamed response into thinking and answer text at "<think>" and
// "</think>", including delimiters split across chunk boundaries. Delimiters
// are not part of any segment.
//
// Text before any delimiter is Outside, or Thinking when
// `implicit_thinking` is set (for backends that never open a think block).
// A "</think>" seen before "<think>" marks the stream malformed; from then on
// every byte is reported as Thinking.
class ThinkSegmenter {
 public:
  explicit ThinkSegmenter(bool implicit_thinking = false) : implicit_(implicit_thinking) {}

  std::vector<Segment> feed(std::string_view chunk);
  std::vector<Segment> finish();

  bool malformed() const noexcept { return malformed_; }
  bool in_answer() const noexcept { return state_ == State::Answer && !malformed_; }
  bool saw_open() const noexcept { return saw_open_; }

 private:
  enum class State : std::uint8_t { Start, Thinking, Answer };

  SegmentKind current_kind() const;
  void emit(std::vector<Segment>& out, std::string_view text) const;

  bool implicit_;
  State state_ = State::Start;
  bool malformed_ = false;
  bool saw_open_ = false;
  std::string held_;
};

}  // namespace capmon
