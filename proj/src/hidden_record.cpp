#include "capmon/hidden_record.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "capmon/errors.hpp"

namespace capmon {

using nlohmann::json;

static_assert(std::endian::native == std::endian::little,
              "record codec assumes a little-endian host");

std::string_view to_string(SolvabilityLabel l) {
  switch (l) {
    case SolvabilityLabel::Solvable: return "solvable";
    case SolvabilityLabel::Unsolvable: return "unsolvable";
    case SolvabilityLabel::Unknown: return "unknown";
  }
  return "unknown";
}

SolvabilityLabel label_from_string(std::string_view s) {
  if (s == "solvable") return SolvabilityLabel::Solvable;
  if (s == "unsolvable") return SolvabilityLabel::Unsolvable;
  if (s == "unknown") return SolvabilityLabel::Unknown;
  throw ValidationError("unknown label \"" + std::string(s) + "\"");
}

namespace {

template <typename T>
void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

void put_str(std::string& out, const std::string& s) {
  put<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
  out += s;
}

class Reader {
 public:
  Reader(std::string_view bytes, std::size_t origin) : b_(bytes), origin_(origin) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, b_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string get_str() {
    auto n = get<std::uint32_t>();
    need(n);
    std::string s(b_.substr(pos_, n));
    pos_ += n;
    return s;
  }
  std::size_t remaining() const { return b_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (b_.size() - pos_ < n)
      throw ValidationError("record file: truncated data at byte " +
                            std::to_string(origin_ + pos_));
  }
  std::string_view b_;
  std::size_t origin_;
  std::size_t pos_ = 0;
};

void check_finite(const HiddenStateRecord& r) {
  for (float x : r.vector)
    if (!std::isfinite(x))
      throw ValidationError("record " + r.trace_id + ": non-finite vector component");
}

}  // namespace

std::string encode_record(const HiddenStateRecord& rec) {
  std::string payload;
  put_str(payload, rec.trace_id);
  put_str(payload, rec.model_id);
  put<std::int32_t>(payload, rec.layer);
  put<std::uint32_t>(payload, static_cast<std::uint32_t>(rec.vector.size()));
  for (float x : rec.vector) put<float>(payload, x);
  put<std::uint8_t>(payload, static_cast<std::uint8_t>(rec.label));
  put<std::uint64_t>(payload, rec.token_usage.value_or(kTokenUsageAbsent));

  std::string out;
  put<std::uint32_t>(out, static_cast<std::uint32_t>(payload.size()));
  out += payload;
  return out;
}

std::string encode_records(const std::vector<HiddenStateRecord>& recs) {
  std::string out(kRecordMagic, 4);
  put<std::uint32_t>(out, kRecordFormatVersion);
  for (const auto& r : recs) out += encode_record(r);
  return out;
}

std::vector<HiddenStateRecord> decode_records(std::string_view bytes) {
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kRecordMagic, 4) != 0)
    throw ValidationError("record file: bad magic");
  std::uint32_t version;
  std::memcpy(&version, bytes.data() + 4, 4);
  if (version != kRecordFormatVersion)
    throw ValidationError("record file: unsupported version " + std::to_string(version));

  std::vector<HiddenStateRecord> out;
  std::size_t pos = 8;
  while (pos < bytes.size()) {
    Reader head(bytes.substr(pos), pos);
    auto len = head.get<std::uint32_t>();
    if (bytes.size() - pos - 4 < len)
      throw ValidationError("record file: truncated record at byte " + std::to_string(pos));
    Reader rd(bytes.substr(pos + 4, len), pos + 4);

    HiddenStateRecord r;
    r.trace_id = rd.get_str();
    r.model_id = rd.get_str();
    r.layer = rd.get<std::int32_t>();
    auto d = rd.get<std::uint32_t>();
    if (rd.remaining() < static_cast<std::size_t>(d) * 4 + 9)
      throw ValidationError("record file: vector overruns record at byte " + std::to_string(pos));
    r.vector.resize(d);
    for (auto& x : r.vector) x = rd.get<float>();
    auto label = rd.get<std::uint8_t>();
    if (label > 2) throw ValidationError("record file: bad label byte in " + r.trace_id);
    r.label = static_cast<SolvabilityLabel>(label);
    auto usage = rd.get<std::uint64_t>();
    if (usage != kTokenUsageAbsent) r.token_usage = usage;
    if (rd.remaining() != 0)
      throw ValidationError("record file: trailing bytes inside record " + r.trace_id);
    if (r.trace_id.empty()) throw ValidationError("record file: empty trace_id");
    check_finite(r);
    if (!out.empty() && out.front().vector.size() != r.vector.size())
      throw ValidationError("record file: inconsistent dimension in " + r.trace_id);
    out.push_back(std::move(r));
    pos += 4 + len;
  }
  return out;
}

void write_records_file(const std::string& path, const std::vector<HiddenStateRecord>& recs) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path);
  auto bytes = encode_records(recs);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::vector<HiddenStateRecord> read_records_file(const std::string& path) {
  return decode_records(slurp(path));
}

std::string record_to_json_line(const HiddenStateRecord& rec) {
  json j;
  j["trace_id"] = rec.trace_id;
  j["model_id"] = rec.model_id;
  if (rec.layer == kFinalLayer)
    j["layer"] = "final";
  else
    j["layer"] = rec.layer;
  j["label"] = std::string(to_string(rec.label));
  if (rec.token_usage)
    j["token_usage"] = *rec.token_usage;
  else
    j["token_usage"] = nullptr;
  j["vector"] = rec.vector;
  return j.dump();
}

HiddenStateRecord record_from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("record json: ") + e.what());
  }
  try {
    HiddenStateRecord r;
    r.trace_id = j.at("trace_id").get<std::string>();
    r.model_id = j.value("model_id", std::string{});
    const auto& layer = j.contains("layer") ? j["layer"] : json("final");
    if (layer.is_string()) {
      if (layer.get<std::string>() != "final")
        throw ValidationError("record json: layer must be \"final\" or an integer");
      r.layer = kFinalLayer;
    } else {
      r.layer = layer.get<std::int32_t>();
    }
    r.label = label_from_string(j.value("label", std::string("unknown")));
    if (j.contains("token_usage") && !j["token_usage"].is_null())
      r.token_usage = j["token_usage"].get<std::uint64_t>();
    r.vector = j.at("vector").get<std::vector<float>>();
    if (r.trace_id.empty()) throw ValidationError("record json: empty trace_id");
    check_finite(r);
    return r;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("record json: ") + e.what());
  }
}

std::vector<HiddenStateRecord> read_records_jsonl(std::string_view text) {
  std::vector<HiddenStateRecord> out;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    ++line_no;
    auto line = text.substr(start, end - start);
    start = end + 1;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    try {
      out.push_back(record_from_json(line));
    } catch (const ValidationError& e) {
      throw ParseError(e.what(), line_no);
    }
    if (out.size() > 1 && out.front().vector.size() != out.back().vector.size())
      throw ParseError("inconsistent dimension", line_no);
  }
  return out;
}

std::vector<HiddenStateRecord> load_records(const std::string& path) {
  auto bytes = slurp(path);
  if (bytes.size() >= 4 && std::memcmp(bytes.data(), kRecordMagic, 4) == 0)
    return decode_records(bytes);
  return read_records_jsonl(bytes);
}

std::string dataset_hash(const std::vector<HiddenStateRecord>& recs) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto bytes = encode_records(recs);
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace capmon
