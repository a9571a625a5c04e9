#include "capmon/matcher.hpp"

#include <algorithm>
#include <utility>

namespace capmon {

namespace {

// True if `a` should win over `b` at the same start position.
bool outranks(Polarity pa, std::size_t lena, std::size_t ida, Polarity pb, std::size_t lenb,
              std::size_t idb) {
  if (pa != pb) return pa == Polarity::Uncertain;
  if (lena != lenb) return lena > lenb;
  return ida < idb;
}

}  // namespace

Matcher::Matcher(const Lexicon& lexicon) {
  nodes_.emplace_back();
  for (Polarity pol : {Polarity::Confident, Polarity::Uncertain}) {
    const auto& list = lexicon.patterns(pol);
    for (std::size_t id = 0; id < list.size(); ++id) {
      std::uint32_t cur = 0;
      for (const auto& tok : list[id].tokens) {
        auto it = nodes_[cur].next.find(tok);
        if (it == nodes_[cur].next.end()) {
          auto fresh = static_cast<std::uint32_t>(nodes_.size());
          nodes_[cur].next.emplace(tok, fresh);
          nodes_.emplace_back();
          cur = fresh;
        } else {
          cur = it->second;
        }
      }
      if (!list[id].tokens.empty()) nodes_[cur].terminals.push_back({pol, id});
      max_len_ = std::max(max_len_, list[id].tokens.size());
    }
  }
}

template <typename Seq>
bool Matcher::best_at_impl(const Seq& tokens, std::size_t pos, std::size_t limit,
                           ExpressionEvent& out) const {
  bool found = false;
  std::uint32_t cur = 0;
  std::size_t end = std::min(tokens.size(), pos + limit);
  for (std::size_t i = pos; i < end; ++i) {
    auto it = nodes_[cur].next.find(tokens[i]);
    if (it == nodes_[cur].next.end()) break;
    cur = it->second;
    std::size_t len = i - pos + 1;
    for (const auto& t : nodes_[cur].terminals) {
      if (!found || outranks(t.polarity, len, t.pattern_id, out.polarity, out.length_tokens,
                             out.pattern_id)) {
        out = {t.polarity, pos, len, t.pattern_id};
        found = true;
      }
    }
  }
  return found;
}

bool Matcher::best_at(const std::vector<std::string>& tokens, std::size_t pos,
                      std::size_t limit, ExpressionEvent& out) const {
  return best_at_impl(tokens, pos, limit, out);
}

std::vector<ExpressionEvent> Matcher::match(const std::vector<std::string>& tokens) const {
  std::vector<ExpressionEvent> events;
  std::size_t pos = 0;
  while (pos < tokens.size()) {
    ExpressionEvent ev;
    if (best_at_impl(tokens, pos, max_len_, ev)) {
      events.push_back(ev);
      pos += ev.length_tokens;
    } else {
      ++pos;
    }
  }
  return events;
}

std::vector<ExpressionEvent> match_expressions(const std::vector<std::string>& tokens,
                                               const Lexicon& lexicon) {
  return Matcher(lexicon).match(tokens);
}

IncrementalMatcher::IncrementalMatcher(std::shared_ptr<const Matcher> matcher)
    : matcher_(std::move(matcher)) {}

void IncrementalMatcher::drain(bool final, std::vector<ExpressionEvent>& out) {
  const std::size_t window = std::max<std::size_t>(matcher_->max_pattern_tokens(), 1);
  while (!buffer_.empty() && (final || buffer_.size() >= window)) {
    ExpressionEvent ev;
    if (matcher_->best_at_impl(buffer_, 0, window, ev)) {
      ev.start_token += base_;
      out.push_back(ev);
      for (std::size_t k = 0; k < ev.length_tokens; ++k) buffer_.pop_front();
      base_ += ev.length_tokens;
    } else {
      buffer_.pop_front();
      ++base_;
    }
  }
}

void IncrementalMatcher::push(std::string token, std::vector<ExpressionEvent>& out) {
  buffer_.push_back(std::move(token));
  drain(false, out);
}

void IncrementalMatcher::finish(std::vector<ExpressionEvent>& out) { drain(true, out); }

std::vector<ExpressionEvent> IncrementalMatcher::pending_events() const {
  IncrementalMatcher copy = *this;
  std::vector<ExpressionEvent> out;
  copy.drain(true, out);
  return out;
}

}  // namespace capmon
