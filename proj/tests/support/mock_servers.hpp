#pragma once

#include <atomic>
#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "capmon/hidden_record.hpp"

namespace capmon::testing {

// Scripted chat-completions backend speaking the same SSE dialect as the
// proxy's upstream. Chooses a script per request: a trailing assistant
// message selects `prefill_tokens`, a user message ending in the reprompt
// suffix selects `reprompt_tokens`, anything else `tokens`.
struct MockScript {
  std::vector<std::string> tokens;
  std::vector<std::string> reprompt_tokens;
  std::vector<std::string> prefill_tokens;
  bool never_stop = false;        // keep streaming `filler` after the script
  bool honor_max_tokens = true;   // stop after max_tokens content deltas
  std::string filler = " step";
  std::size_t split_writes = 2;   // each event is written in this many pieces
  int status = 200;
};

struct MockRequest {
  std::string body;
  std::string kind;  // "main", "reprompt" or "prefill"
  std::size_t max_tokens = 0;
  std::size_t tokens_sent = 0;
  bool cancelled = false;
};

class MockBackend {
 public:
  explicit MockBackend(MockScript script);
  ~MockBackend();

  int start();  // returns the bound port
  void stop();
  std::string url() const;

  std::vector<MockRequest> requests() const;
  // Exact body bytes served for the i-th request.
  std::string served_bytes(std::size_t i) const;

  // SSE body the backend sends for `tokens`, with a role chunk first and a
  // finish chunk plus [DONE] last.
  static std::string render(const std::vector<std::string>& tokens, const std::string& finish = "stop");
  static std::string event_for(const std::string& token);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::thread thread_;
  int port_ = 0;
};

// Extractor sidecar stand-in: POST /extract answers with a record whose
// vector comes from `vector_for(question)`.
class MockSidecar {
 public:
  using VectorFn = std::function<std::vector<float>(const std::string&)>;
  explicit MockSidecar(VectorFn fn, int status = 200);
  ~MockSidecar();

  int start();
  void stop();
  std::string url() const;
  std::size_t calls() const { return calls_.load(); }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<std::size_t> calls_{0};
};

// Streams a chat request through `url` and returns the raw response body.
struct ClientResult {
  int status = 0;
  std::string body;
};
ClientResult post_chat(const std::string& url, const std::string& json_body);

// Content deltas of an SSE body, in order.
std::vector<std::string> content_deltas(const std::string& sse_body);

}  // namespace capmon::testing
