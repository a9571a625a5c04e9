#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace capmon {

// Matching tokenizer, independent of any model vocabulary.
//
//   - ASCII letters are case-folded.
//   - Whitespace separates tokens and is dropped.
//   - Word characters are ASCII alphanumerics, '_' and any non-ASCII byte.
//   - An apostrophe directly after a word character stays inside the word
//     ("i'm" is one token); U+2019 is folded to '\''.
//   - Every other printable character is a single-character token.
//
// The batch and streaming forms share one implementation, so feeding text in
// arbitrary chunks yields exactly the tokens of a single batch call.
class StreamingTokenizer {
 public:
  // Appends every token completed by `chunk` to `out`.
  void feed(std::string_view chunk, std::vector<std::string>& out);

  // Emits the in-progress word, if any. The tokenizer may be reused after.
  void finish(std::vector<std::string>& out);

  // What finish() would emit, without consuming state.
  const std::string& pending() const noexcept { return word_; }
  bool has_pending() const noexcept { return !word_.empty(); }

 private:
  void emit_word(std::vector<std::string>& out);

  std::string word_;
};

std::vector<std::string> tokenize(std::string_view text);

// Joins tokens with single spaces; tokenize(join_tokens(t)) == t for any
// token list produced by tokenize().
std::string join_tokens(const std::vector<std::string>& tokens);

}  // namespace capmon
