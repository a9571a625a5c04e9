#include "capmon/lexicon.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <utility>

#include <json.hpp>

#include "capmon/errors.hpp"
#include "capmon/tokenizer.hpp"
#include "default_lexicon_data.hpp"

namespace capmon {

using nlohmann::json;

std::string_view to_string(Polarity p) {
  return p == Polarity::Confident ? "confident" : "uncertain";
}

std::size_t Lexicon::max_pattern_tokens() const {
  std::size_t m = 0;
  for (const auto* list : {&confident, &uncertain})
    for (const auto& p : *list) m = std::max(m, p.tokens.size());
  return m;
}

void Lexicon::validate() const {
  if (confident.empty()) throw ValidationError("lexicon: confident list is empty");
  if (uncertain.empty()) throw ValidationError("lexicon: uncertain list is empty");
  for (Polarity pol : {Polarity::Confident, Polarity::Uncertain}) {
    std::set<std::vector<std::string>> seen;
    for (const auto& p : patterns(pol)) {
      if (p.tokens.empty())
        throw ValidationError("lexicon: empty " + std::string(to_string(pol)) +
                              " pattern \"" + p.text + "\"");
      if (!seen.insert(p.tokens).second)
        throw ValidationError("lexicon: duplicate " + std::string(to_string(pol)) +
                              " pattern \"" + p.text + "\"");
    }
  }
}

namespace {

std::size_t line_of_byte(std::string_view doc, std::size_t byte) {
  std::size_t end = std::min(byte, doc.size());
  return 1 + static_cast<std::size_t>(std::count(doc.begin(), doc.begin() + end, '\n'));
}

Pattern make_pattern(std::string text, std::string note = {}) {
  Pattern p;
  p.tokens = tokenize(text);
  p.text = std::move(text);
  p.note = std::move(note);
  return p;
}

std::vector<Pattern> read_list(const json& doc, const char* key) {
  auto it = doc.find(key);
  if (it == doc.end()) throw ValidationError(std::string("lexicon: missing \"") + key + "\"");
  if (!it->is_array())
    throw ValidationError(std::string("lexicon: \"") + key + "\" must be an array");
  std::vector<Pattern> out;
  for (const auto& e : *it) {
    if (e.is_string()) {
      out.push_back(make_pattern(e.get<std::string>()));
    } else if (e.is_object() && e.contains("text") && e["text"].is_string()) {
      std::string note = e.value("note", std::string{});
      out.push_back(make_pattern(e["text"].get<std::string>(), std::move(note)));
    } else {
      throw ValidationError(std::string("lexicon: malformed entry in \"") + key + "\"");
    }
  }
  return out;
}

}  // namespace

Lexicon load_lexicon(std::string_view document) {
  json doc;
  try {
    doc = json::parse(document.begin(), document.end());
  } catch (const json::parse_error& e) {
    throw ParseError(e.what(), line_of_byte(document, e.byte == 0 ? 0 : e.byte - 1));
  }
  if (!doc.is_object()) throw ParseError("lexicon document must be an object", 1);

  Lexicon lex;
  auto v = doc.find("version");
  if (v == doc.end() || !v->is_string() || v->get<std::string>().empty())
    throw ValidationError("lexicon: missing \"version\" string");
  lex.version = v->get<std::string>();
  lex.confident = read_list(doc, "confident");
  lex.uncertain = read_list(doc, "uncertain");
  lex.validate();
  return lex;
}

Lexicon load_lexicon_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open lexicon file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return load_lexicon(ss.str());
}

Lexicon make_lexicon(std::string version, const std::vector<std::string>& confident,
                     const std::vector<std::string>& uncertain) {
  Lexicon lex;
  lex.version = std::move(version);
  for (const auto& s : confident) lex.confident.push_back(make_pattern(s));
  for (const auto& s : uncertain) lex.uncertain.push_back(make_pattern(s));
  lex.validate();
  return lex;
}

std::string_view default_lexicon_document() { return detail::kDefaultLexiconJson; }

const Lexicon& default_lexicon() {
  static const Lexicon lex = load_lexicon(default_lexicon_document());
  return lex;
}

}  // namespace capmon
