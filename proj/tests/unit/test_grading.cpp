#include <doctest.h>

#include "capmon/grading.hpp"
#include "capmon/intervention.hpp"

using namespace capmon;

TEST_CASE("normalization table") {
  struct Row {
    const char* in;
    const char* out;
  };
  const Row rows[] = {
      {"42", "42"},           {"042", "42"},        {" 42. ", "42"},  {"$42$", "42"},
      {"1,000", "1000"},      {"-0", "0"},          {"2.50", "2.5"},  {"3.000", "3"},
      {"+7", "7"},            {"-0012.10", "-12.1"}, {"0.0", "0"},    {"\\frac{1}{2}", "\\frac{1}{2}"},
      {"X + Y", "x+y"},       {"12,34", "12,34"},   {"", ""},
  };
  for (const auto& r : rows) {
    CAPTURE(r.in);
    CHECK(normalize_answer(r.in) == r.out);
    CHECK(normalize_answer(normalize_answer(r.in)) == normalize_answer(r.in));
  }
}

TEST_CASE("extraction") {
  CHECK(extract_answer("so \\boxed{1} then \\boxed{\\frac{3}{4}} done").text == "\\frac{3}{4}");
  CHECK(extract_answer("so \\boxed{1}").boxed);
  CHECK(extract_answer("line one\nThe answer is 042\n\n").text == "042");
  CHECK(extract_answer("work\nFinal answer: 17").text == "17");
  CHECK(extract_answer("just 9").text == "just 9");
  CHECK(extract_answer("").text.empty());
}

TEST_CASE("grading") {
  CHECK(grade_answer("... \\boxed{42}", "42").grade == Grade::Correct);
  CHECK(grade_answer("the answer is 042", "42").grade == Grade::Correct);
  CHECK(grade_answer("\\boxed{41}", "42").grade == Grade::Wrong);
  auto pf = grade_answer("   \n", "42");
  CHECK(pf.grade == Grade::Wrong);
  CHECK(pf.parse_failure);
  CHECK(grade_answer(std::string(output_prefix()) + " 1. try", "42").grade == Grade::Abstained);
  CHECK(grade_answer("This question is beyond my capability boundary, but I can outline", "42").grade ==
        Grade::Abstained);
  auto mid = grade_answer("Let me see. I think this question is beyond my capability boundary. Steps.", "42");
  CHECK(mid.grade == Grade::Abstained);
  CHECK(mid.marker_mid_output);
  CHECK(is_abstention("<think>\nI think this question is beyond my capability boundary."));
  CHECK_FALSE(is_abstention("\\boxed{3}"));
}
