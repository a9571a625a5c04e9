#include "capmon/tokenizer.hpp"

namespace capmon {

namespace {

bool is_space(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool is_word(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
         c == '_' || c >= 0x80;
}

char fold(unsigned char c) {
  if (c >= 'A' && c <= 'Z') return static_cast<char>(c - 'A' + 'a');
  return static_cast<char>(c);
}

constexpr std::string_view kRightQuote = "\xE2\x80\x99";

}  // namespace

void StreamingTokenizer::emit_word(std::vector<std::string>& out) {
  if (word_.empty()) return;
  std::size_t pos = 0;
  while ((pos = word_.find(kRightQuote, pos)) != std::string::npos) {
    word_.replace(pos, kRightQuote.size(), "'");
    pos += 1;
  }
  out.push_back(std::move(word_));
  word_.clear();
}

void StreamingTokenizer::feed(std::string_view chunk, std::vector<std::string>& out) {
  for (unsigned char c : chunk) {
    if (is_word(c)) {
      word_.push_back(fold(c));
    } else if (c == '\'' && !word_.empty()) {
      word_.push_back('\'');
    } else if (is_space(c)) {
      emit_word(out);
    } else if (c < 0x20 || c == 0x7F) {
      // other control bytes behave like whitespace
      emit_word(out);
    } else {
      emit_word(out);
      out.emplace_back(1, static_cast<char>(c));
    }
  }
}

void StreamingTokenizer::finish(std::vector<std::string>& out) { emit_word(out); }

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  StreamingTokenizer tok;
  tok.feed(text, out);
  tok.finish(out);
  return out;
}

std::string join_tokens(const std::vector<std::string>& tokens) {
  std::string s;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) s.push_back(' ');
    s += tokens[i];
  }
  return s;
}

}  // namespace capmon
