#pragma once

#include <atomic>
#include <cstddef>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "capmon/matcher.hpp"
#include "capmon/policy_config.hpp"
#include "capmon/trace.hpp"

namespace httplib {
class Server;
}

namespace capmon {

inline constexpr std::string_view kVersion = "0.1.0";

// Incremental splitter for a Server-Sent Events byte stream. Events end at a
// blank line; each complete event is returned with its original bytes.
class SseSplitter {
 public:
  struct Event {
    std::string raw;   // exact bytes including the terminating blank line
    std::string data;  // concatenated "data:" field values
  };

  std::vector<Event> feed(std::string_view bytes);
  // Bytes left after the last complete event (a trailing partial event).
  std::string take_rest();

 private:
  std::string buf_;
};

// Content of a chat-completion chunk: choices[0].delta.content, if any.
std::optional<std::string> delta_content(std::string_view data);

struct ProxyConfig {
  std::string listen_host = "127.0.0.1";
  int listen_port = 8080;  // 0 picks a free port
  std::string backend_url = "http://127.0.0.1:8000";
  std::string sidecar_url;  // required for hidden_monitor
  std::string trace_dir;    // empty disables persistence
  PolicyFile policy;
  int upstream_timeout_s = 300;
};

// Streaming chat-completions gateway. Endpoints:
//   POST /v1/chat/completions   monitored relay to the backend
//   GET  /health                build version and policy mode
class ProxyServer {
 public:
  ProxyServer(ProxyConfig config, std::shared_ptr<const Matcher> matcher);
  ~ProxyServer();
  ProxyServer(const ProxyServer&) = delete;
  ProxyServer& operator=(const ProxyServer&) = delete;

  // Binds the listen socket; returns the bound port. Throws ConfigError.
  int bind();
  // Serves until stop(). bind() must have been called.
  void run();
  // bind() + run() on a background thread.
  int start();
  void stop();

  int port() const noexcept { return port_; }

  // Traces of completed sessions, most recent last (kept in memory too).
  std::vector<ReasoningTrace> completed_traces() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  int port_ = 0;
  std::thread thread_;
};

}  // namespace capmon
