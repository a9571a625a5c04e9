#include <doctest.h>

#include <memory>
#include <random>

#include "capmon/matcher.hpp"
#include "capmon/tokenizer.hpp"
#include "oracles.hpp"

using namespace capmon;

TEST_CASE("single unambiguous match") {
  auto lex = make_lexicon("t", {"so , no mistake"}, {"i'm not sure"});
  auto ev = match_expressions(tokenize("hmm i'm not sure this is right"), lex);
  REQUIRE(ev.size() == 1);
  CHECK(ev[0].polarity == Polarity::Uncertain);
  CHECK(ev[0].start_token == 1);
  CHECK(ev[0].length_tokens == 3);
}

TEST_CASE("uncertain wins an overlapping span") {
  auto lex = make_lexicon("t", {"i might be"}, {"i might be wrong"});
  auto toks = tokenize("well i might be wrong here");
  auto ev = match_expressions(toks, lex);
  REQUIRE(ev.size() == 1);
  CHECK(ev[0].polarity == Polarity::Uncertain);
  CHECK(ev == oracle::brute_force_match(toks, lex));
}

TEST_CASE("uncertain beats a longer confident pattern at the same start") {
  auto lex = make_lexicon("t", {"i think it's correct"}, {"i think"});
  auto ev = match_expressions(tokenize("i think it's correct"), lex);
  REQUIRE(ev.size() == 1);
  CHECK(ev[0].polarity == Polarity::Uncertain);
  CHECK(ev[0].length_tokens == 2);
}

TEST_CASE("longest then lowest id within a polarity") {
  auto lex = make_lexicon("t", {"a b", "a b c", "a"}, {"zz"});
  auto ev = match_expressions(tokenize("a b c a b a"), lex);
  REQUIRE(ev.size() == 3);
  CHECK(ev[0].pattern_id == 1);
  CHECK(ev[1].pattern_id == 0);
  CHECK(ev[2].pattern_id == 2);
}

TEST_CASE("empty token sequence") {
  CHECK(match_expressions({}, default_lexicon()).empty());
}

TEST_CASE("fuzzed agreement with brute force, batch and incremental") {
  auto lex = oracle::overlapping_lexicon();
  auto m = std::make_shared<const Matcher>(lex);
  std::mt19937_64 rng(5);
  for (int i = 0; i < 400; ++i) {
    auto toks = oracle::fuzz_tokens(rng, lex, std::uniform_int_distribution<std::size_t>(0, 80)(rng));
    const auto expect = oracle::brute_force_match(toks, lex);
    const auto got = m->match(toks);
    REQUIRE(got == expect);
    for (std::size_t k = 1; k < got.size(); ++k) CHECK(got[k - 1].end_token() <= got[k].start_token);
    for (const auto& e : got) {
      CHECK(e.end_token() <= toks.size());
      if (e.polarity == Polarity::Confident)
        for (const auto& o : oracle::all_occurrences(toks, lex))
          CHECK_FALSE((o.start_token == e.start_token && o.polarity == Polarity::Uncertain));
    }

    IncrementalMatcher inc(m);
    std::vector<ExpressionEvent> streamed;
    for (std::size_t k = 0; k < toks.size(); ++k) {
      inc.push(toks[k], streamed);
      // Released plus pending must equal batch matching over the prefix.
      auto now = streamed;
      auto pend = inc.pending_events();
      now.insert(now.end(), pend.begin(), pend.end());
      std::vector<std::string> prefix(toks.begin(), toks.begin() + static_cast<long>(k + 1));
      REQUIRE(now == oracle::brute_force_match(prefix, lex));
    }
    inc.finish(streamed);
    CHECK(streamed == expect);
  }
}
