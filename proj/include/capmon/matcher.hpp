#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "capmon/lexicon.hpp"

namespace capmon {

struct ExpressionEvent {
  Polarity polarity = Polarity::Confident;
  std::size_t start_token = 0;
  std::size_t length_tokens = 0;
  std::size_t pattern_id = 0;  // index within the polarity's list

  std::size_t end_token() const { return start_token + length_tokens; }
  friend bool operator==(const ExpressionEvent&, const ExpressionEvent&) = default;
};

// Lexicon compiled into a token trie. Immutable after construction; safe to
// share across threads.
//
// Resolution at a start position: uncertain patterns beat confident ones,
// then the longest pattern wins, then the lowest pattern_id. After a match
// scanning resumes right after it, so events never overlap.
class Matcher {
 public:
  explicit Matcher(const Lexicon& lexicon);

  // Best pattern starting at tokens[pos], looking at no more than `limit`
  // tokens. Returns false when nothing matches.
  bool best_at(const std::vector<std::string>& tokens, std::size_t pos, std::size_t limit,
               ExpressionEvent& out) const;

  std::vector<ExpressionEvent> match(const std::vector<std::string>& tokens) const;

  std::size_t max_pattern_tokens() const noexcept { return max_len_; }

 private:
  struct Terminal {
    Polarity polarity;
    std::size_t pattern_id;
  };
  struct Node {
    std::unordered_map<std::string, std::uint32_t> next;
    std::vector<Terminal> terminals;
  };

  template <typename Seq>
  bool best_at_impl(const Seq& tokens, std::size_t pos, std::size_t limit,
                    ExpressionEvent& out) const;

  friend class IncrementalMatcher;

  std::vector<Node> nodes_;
  std::size_t max_len_ = 0;
};

std::vector<ExpressionEvent> match_expressions(const std::vector<std::string>& tokens,
                                               const Lexicon& lexicon);

// Token-at-a-time form of Matcher::match. Events are released once no longer
// pattern could change the decision; finish() releases the rest. The event
// list produced over a whole stream equals Matcher::match on the batch.
class IncrementalMatcher {
 public:
  explicit IncrementalMatcher(std::shared_ptr<const Matcher> matcher);

  void push(std::string token, std::vector<ExpressionEvent>& out);
  void finish(std::vector<ExpressionEvent>& out);

  // Events finish() would release now, without consuming state.
  std::vector<ExpressionEvent> pending_events() const;

  std::size_t tokens_seen() const noexcept { return base_ + buffer_.size(); }

 private:
  void drain(bool final, std::vector<ExpressionEvent>& out);

  std::shared_ptr<const Matcher> matcher_;
  std::deque<std::string> buffer_;
  std::size_t base_ = 0;  // absolute index of buffer_.front()
};

}  // namespace capmon
