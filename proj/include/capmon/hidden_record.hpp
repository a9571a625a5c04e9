#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace capmon {

enum class SolvabilityLabel : std::uint8_t { Solvable = 0, Unsolvable = 1, Unknown = 2 };

std::string_view to_string(SolvabilityLabel l);
SolvabilityLabel label_from_string(std::string_view s);

inline constexpr std::int32_t kFinalLayer = -1;

// Last-input-token activation of one question.
struct HiddenStateRecord {
  std::string trace_id;
  std::string model_id;
  std::int32_t layer = kFinalLayer;
  std::vector<float> vector;
  SolvabilityLabel label = SolvabilityLabel::Unknown;
  std::optional<std::uint64_t> token_usage;

  friend bool operator==(const HiddenStateRecord&, const HiddenStateRecord&) = default;
};

// Binary record file (all integers little-endian):
//
//   header  : "CMHS" (4 bytes), u32 format version = 1
//   record  : u32 payload_length, then payload:
//             u32 trace_id_length, trace_id bytes (UTF-8)
//             u32 model_id_length, model_id bytes (UTF-8)
//             i32 layer (-1 = final layer)
//             u32 d, d x f32 (IEEE-754 binary32)
//             u8  label (0 solvable, 1 unsolvable, 2 unknown)
//             u64 token_usage (0xFFFFFFFFFFFFFFFF = absent)
//
// Records follow the header back to back until end of file. An empty
// dataset is the bare 8-byte header.
inline constexpr char kRecordMagic[4] = {'C', 'M', 'H', 'S'};
inline constexpr std::uint32_t kRecordFormatVersion = 1;
inline constexpr std::uint64_t kTokenUsageAbsent = ~std::uint64_t{0};

std::string encode_record(const HiddenStateRecord& rec);  // one record, with length prefix
std::string encode_records(const std::vector<HiddenStateRecord>& recs);  // header + records

// Strict reader: rejects bad magic/version, truncated or overlong payloads,
// non-finite components, mixed dimensions and unknown label bytes.
std::vector<HiddenStateRecord> decode_records(std::string_view bytes);

void write_records_file(const std::string& path, const std::vector<HiddenStateRecord>& recs);
std::vector<HiddenStateRecord> read_records_file(const std::string& path);

// Text form: one JSON object per line,
//   {"trace_id": "...", "model_id": "...", "layer": "final" | int,
//    "label": "solvable" | "unsolvable" | "unknown",
//    "token_usage": int | null, "vector": [floats]}
std::string record_to_json_line(const HiddenStateRecord& rec);
HiddenStateRecord record_from_json(std::string_view text);
std::vector<HiddenStateRecord> read_records_jsonl(std::string_view text);

// Chooses binary or JSON lines by content (binary files start with "CMHS").
std::vector<HiddenStateRecord> load_records(const std::string& path);

// FNV-1a 64 over the binary encoding; rendered as 16 hex digits.
std::string dataset_hash(const std::vector<HiddenStateRecord>& recs);

}  // namespace capmon
