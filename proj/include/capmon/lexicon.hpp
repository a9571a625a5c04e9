#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace capmon {

enum class Polarity : std::uint8_t { Confident = 0, Uncertain = 1 };

std::string_view to_string(Polarity p);

struct Pattern {
  std::string text;                 // as written in the lexicon file
  std::vector<std::string> tokens;  // normalized token sequence
  std::string note;                 // provenance flag, empty if none
};

// Two expression sets used to measure expressed confidence in reasoning text.
// Invariants (checked by validate()): both lists non-empty, no empty pattern,
// (polarity, token sequence) unique.
struct Lexicon {
  std::string version;
  std::vector<Pattern> confident;
  std::vector<Pattern> uncertain;

  const std::vector<Pattern>& patterns(Polarity p) const {
    return p == Polarity::Confident ? confident : uncertain;
  }
  std::size_t max_pattern_tokens() const;
  void validate() const;
};

// Parses the lexicon document:
//   { "version": "...", "confident": [...], "uncertain": [...] }
// Entries are strings or {"text": "...", "note": "..."} objects.
// Throws ParseError (with line number) or ValidationError.
Lexicon load_lexicon(std::string_view document);
Lexicon load_lexicon_file(const std::string& path);

Lexicon make_lexicon(std::string version, const std::vector<std::string>& confident,
                     const std::vector<std::string>& uncertain);

// The lexicon compiled into the toolkit; identical to data/lexicon/default.json.
const Lexicon& default_lexicon();
std::string_view default_lexicon_document();

}  // namespace capmon
