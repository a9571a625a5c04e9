#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <limits>

#include "capmon/errors.hpp"
#include "capmon/hidden_record.hpp"

using namespace capmon;

namespace {

void le32(std::string& s, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) s += static_cast<char>((v >> (8 * i)) & 0xFF);
}
void le64(std::string& s, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) s += static_cast<char>((v >> (8 * i)) & 0xFF);
}

HiddenStateRecord sample(std::string id, std::vector<float> v, SolvabilityLabel l,
                         std::optional<std::uint64_t> tu = std::nullopt) {
  HiddenStateRecord r;
  r.trace_id = std::move(id);
  r.model_id = "m";
  r.vector = std::move(v);
  r.label = l;
  r.token_usage = tu;
  return r;
}

}  // namespace

TEST_CASE("binary layout matches a hand-assembled file") {
  auto r = sample("ab", {1.0f, -2.5f}, SolvabilityLabel::Unsolvable, 300);
  std::string expect = "CMHS";
  le32(expect, 1);
  std::string payload;
  le32(payload, 2);
  payload += "ab";
  le32(payload, 1);
  payload += "m";
  le32(payload, 0xFFFFFFFFu);  // layer -1
  le32(payload, 2);
  le32(payload, 0x3F800000u);  // 1.0f
  le32(payload, 0xC0200000u);  // -2.5f
  payload += '\x01';
  le64(payload, 300);
  le32(expect, static_cast<std::uint32_t>(payload.size()));
  expect += payload;
  CHECK(encode_records({r}) == expect);
  CHECK(decode_records(expect) == std::vector<HiddenStateRecord>{r});
}

TEST_CASE("empty dataset is the bare header") {
  auto b = encode_records({});
  CHECK(b.size() == 8);
  CHECK(decode_records(b).empty());
}

TEST_CASE("absent token usage uses the all-ones sentinel") {
  auto r = sample("x", {0.5f}, SolvabilityLabel::Unknown);
  auto b = encode_records({r});
  CHECK(b.substr(b.size() - 8) == std::string(8, '\xFF'));
  CHECK_FALSE(decode_records(b)[0].token_usage.has_value());
}

TEST_CASE("strict reader rejects malformed input") {
  auto good = encode_records({sample("a", {1, 2}, SolvabilityLabel::Solvable, 5),
                              sample("b", {3, 4}, SolvabilityLabel::Unsolvable)});
  auto bad = good;
  bad[0] = 'X';
  CHECK_THROWS_AS(decode_records(bad), ValidationError);
  bad = good;
  bad[4] = 2;
  CHECK_THROWS_AS(decode_records(bad), ValidationError);
  CHECK_THROWS_AS(decode_records(good.substr(0, good.size() - 3)), ValidationError);
  CHECK_THROWS_AS(decode_records(good.substr(0, 6)), ValidationError);

  auto nan = encode_records({sample("n", {std::numeric_limits<float>::quiet_NaN()}, SolvabilityLabel::Solvable)});
  CHECK_THROWS_AS(decode_records(nan), ValidationError);
  auto inf = encode_records({sample("n", {std::numeric_limits<float>::infinity()}, SolvabilityLabel::Solvable)});
  CHECK_THROWS_AS(decode_records(inf), ValidationError);

  auto mixed = encode_records({sample("a", {1, 2}, SolvabilityLabel::Solvable),
                               sample("b", {1, 2, 3}, SolvabilityLabel::Solvable)});
  CHECK_THROWS_AS(decode_records(mixed), ValidationError);

  auto lab = encode_records({sample("a", {1}, SolvabilityLabel::Solvable)});
  lab[lab.size() - 9] = 7;
  CHECK_THROWS_AS(decode_records(lab), ValidationError);

  // A payload length larger than its content leaves trailing bytes.
  auto over = encode_records({sample("a", {1}, SolvabilityLabel::Solvable)});
  over[8] = static_cast<char>(over[8] + 1);
  over += '\0';
  CHECK_THROWS_AS(decode_records(over), ValidationError);
}

TEST_CASE("json lines round-trip and file sniffing") {
  auto a = sample("a", {1.25f, -0.0625f, 3e-8f}, SolvabilityLabel::Solvable, 42);
  auto b = sample("b", {0.1f, 0.2f, 0.3f}, SolvabilityLabel::Unsolvable);
  b.layer = 12;
  const std::string text = record_to_json_line(a) + "\n\n" + record_to_json_line(b) + "\n";
  auto back = read_records_jsonl(text);
  REQUIRE(back.size() == 2);
  CHECK(back[0] == a);
  CHECK(back[1] == b);
  CHECK(record_from_json(R"({"trace_id":"t","model_id":"m","layer":"final","label":"unknown","token_usage":null,"vector":[1]})").layer == kFinalLayer);
  CHECK_THROWS_AS(record_from_json(R"({"trace_id":"t","model_id":"m","layer":"top","label":"unknown","vector":[1]})"), ValidationError);
  CHECK_THROWS_AS(read_records_jsonl(record_to_json_line(a) + "\n{\"trace_id\":\"z\",\"model_id\":\"m\",\"label\":\"solvable\",\"vector\":[1]}\n"), ParseError);

  auto dir = std::filesystem::temp_directory_path() / "capmon_hr_test";
  std::filesystem::create_directories(dir);
  write_records_file((dir / "r.bin").string(), {a, b});
  CHECK(load_records((dir / "r.bin").string()) == std::vector<HiddenStateRecord>{a, b});
  {
    std::FILE* f = std::fopen((dir / "r.jsonl").string().c_str(), "wb");
    std::fwrite(text.data(), 1, text.size(), f);
    std::fclose(f);
  }
  CHECK(load_records((dir / "r.jsonl").string()) == std::vector<HiddenStateRecord>{a, b});
  std::filesystem::remove_all(dir);
}

TEST_CASE("dataset hash is stable and content sensitive") {
  auto a = sample("a", {1, 2}, SolvabilityLabel::Solvable);
  auto h = dataset_hash({a});
  CHECK(h.size() == 16);
  CHECK(h == dataset_hash({a}));
  a.vector[1] = 2.0001f;
  CHECK(h != dataset_hash({a}));
}
