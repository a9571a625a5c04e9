#include <doctest.h>

#include <random>

#include "capmon/think_segmenter.hpp"

using namespace capmon;

namespace {

struct Parts {
  std::string outside, thinking, answer;
};

Parts collect(ThinkSegmenter& s, const std::vector<std::string>& chunks) {
  Parts p;
  auto put = [&](const std::vector<Segment>& segs) {
    for (const auto& g : segs) {
      if (g.kind == SegmentKind::Outside) p.outside += g.text;
      if (g.kind == SegmentKind::Thinking) p.thinking += g.text;
      if (g.kind == SegmentKind::Answer) p.answer += g.text;
    }
  };
  for (const auto& c : chunks) put(s.feed(c));
  put(s.finish());
  return p;
}

}  // namespace

TEST_CASE("delimiter split across chunks") {
  ThinkSegmenter s;
  auto p = collect(s, {"<thi", "nk>I might", " be wrong</th", "ink>\n\\boxed{3}"});
  CHECK(p.outside.empty());
  CHECK(p.thinking == "I might be wrong");
  CHECK(p.answer == "\n\\boxed{3}");
  CHECK_FALSE(s.malformed());
  CHECK(s.saw_open());
}

TEST_CASE("no delimiters") {
  ThinkSegmenter plain;
  auto p = collect(plain, {"just ", "text"});
  CHECK(p.outside == "just text");
  ThinkSegmenter implicit(true);
  auto q = collect(implicit, {"just ", "text"});
  CHECK(q.thinking == "just text");
}

TEST_CASE("close before open marks malformed") {
  ThinkSegmenter s;
  auto p = collect(s, {"abc</think>def<think>g"});
  CHECK(s.malformed());
  CHECK(p.thinking.find("def") != std::string::npos);
  CHECK(p.answer.empty());
}

TEST_CASE("a near-delimiter that never completes is released as text") {
  ThinkSegmenter s;
  auto p = collect(s, {"<think>a <thin", "g"});
  CHECK(p.thinking == "a <thing");
  ThinkSegmenter t;
  auto q = collect(t, {"<think>x</thi"});
  CHECK(q.thinking == "x</thi");
}

TEST_CASE("chunk-boundary fuzz equals whole-string segmentation") {
  std::mt19937_64 rng(2);
  const std::vector<std::string> pieces = {"<think>", "</think>", "a", " b", "<", "/", "think", ">", "\n", "<th"};
  for (int it = 0; it < 2000; ++it) {
    std::string text;
    for (int k = int(rng() % 12); k > 0; --k) text += pieces[rng() % pieces.size()];
    ThinkSegmenter whole;
    auto w = collect(whole, {text});
    std::vector<std::string> chunks;
    for (std::size_t pos = 0; pos < text.size();) {
      std::size_t n = 1 + rng() % 4;
      chunks.push_back(text.substr(pos, n));
      pos += n;
    }
    ThinkSegmenter split;
    auto s = collect(split, chunks);
    CHECK(s.outside == w.outside);
    CHECK(s.thinking == w.thinking);
    CHECK(s.answer == w.answer);
    CHECK(split.malformed() == whole.malformed());
  }
}
