#include "mock_servers.hpp"

#include "capmon/intervention.hpp"
#include "capmon/proxy.hpp"

#include <httplib.h>
#include <json.hpp>

namespace capmon::testing {

using nlohmann::json;

std::string MockBackend::event_for(const std::string& token) {
  json j = {{"id", "mock"},
            {"object", "chat.completion.chunk"},
            {"choices", json::array({{{"index", 0}, {"delta", {{"content", token}}}, {"finish_reason", nullptr}}})}};
  return "data: " + j.dump() + "\n\n";
}

namespace {

std::string role_event() {
  json j = {{"id", "mock"},
            {"object", "chat.completion.chunk"},
            {"choices", json::array({{{"index", 0}, {"delta", {{"role", "assistant"}}}, {"finish_reason", nullptr}}})}};
  return "data: " + j.dump() + "\n\n";
}

std::string finish_event(const std::string& reason) {
  json j = {{"id", "mock"},
            {"object", "chat.completion.chunk"},
            {"choices", json::array({{{"index", 0}, {"delta", json::object()}, {"finish_reason", reason}}})}};
  return "data: " + j.dump() + "\n\n";
}

bool write_split(httplib::DataSink& sink, const std::string& s, std::size_t pieces) {
  if (pieces < 2 || s.size() < pieces) return sink.write(s.data(), s.size());
  std::size_t step = s.size() / pieces, off = 0;
  for (std::size_t k = 0; k < pieces; ++k) {
    std::size_t n = k + 1 == pieces ? s.size() - off : step;
    if (!sink.write(s.data() + off, n)) return false;
    off += n;
  }
  return true;
}

}  // namespace

std::string MockBackend::render(const std::vector<std::string>& tokens, const std::string& finish) {
  std::string out = role_event();
  for (const auto& t : tokens) out += event_for(t);
  out += finish_event(finish);
  out += "data: [DONE]\n\n";
  return out;
}

struct MockBackend::Impl {
  MockScript script;
  httplib::Server server;
  mutable std::mutex mu;
  std::vector<MockRequest> requests;
  std::vector<std::string> served;
};

MockBackend::MockBackend(MockScript script) : impl_(std::make_unique<Impl>()) {
  impl_->script = std::move(script);
  auto* impl = impl_.get();
  impl->server.Post("/v1/chat/completions", [impl](const httplib::Request& req, httplib::Response& res) {
    const MockScript& sc = impl->script;
    if (sc.status != 200) {
      res.status = sc.status;
      res.set_content("{\"error\":{\"message\":\"scripted failure\"}}", "application/json");
      return;
    }
    json body = json::parse(req.body);
    MockRequest rec;
    rec.body = req.body;
    rec.max_tokens = body.value("max_tokens", std::size_t{0});
    const auto& msgs = body["messages"];
    const auto& last = msgs.back();
    const std::string content = last.value("content", std::string{});
    const std::string suffix(reprompt_suffix());
    if (last.value("role", "") == "assistant")
      rec.kind = "prefill";
    else if (content.size() >= suffix.size() &&
             content.compare(content.size() - suffix.size(), suffix.size(), suffix) == 0)
      rec.kind = "reprompt";
    else
      rec.kind = "main";

    std::size_t idx;
    {
      std::lock_guard<std::mutex> lk(impl->mu);
      idx = impl->requests.size();
      impl->requests.push_back(rec);
      impl->served.emplace_back();
    }
    const std::vector<std::string>* tokens =
        rec.kind == "prefill" ? &sc.prefill_tokens : rec.kind == "reprompt" ? &sc.reprompt_tokens : &sc.tokens;

    res.set_chunked_content_provider("text/event-stream", [impl, idx, tokens, rec](std::size_t, httplib::DataSink& sink) {
      const MockScript& sc = impl->script;
      auto send = [&](const std::string& s) {
        bool ok = write_split(sink, s, sc.split_writes);
        std::lock_guard<std::mutex> lk(impl->mu);
        if (ok) impl->served[idx] += s;
        return ok;
      };
      auto count = [&](bool cancelled) {
        std::lock_guard<std::mutex> lk(impl->mu);
        if (cancelled) impl->requests[idx].cancelled = true;
        else ++impl->requests[idx].tokens_sent;
      };
      const std::size_t cap = sc.honor_max_tokens && rec.max_tokens ? rec.max_tokens : SIZE_MAX;
      std::size_t sent = 0;
      if (!send(role_event())) return count(true), false;
      for (const auto& t : *tokens) {
        if (sent == cap) break;
        if (!send(MockBackend::event_for(t))) return count(true), false;
        count(false);
        ++sent;
      }
      // A bounded "forever" keeps a broken proxy from hanging the test.
      for (std::size_t guard = 0; sc.never_stop && sent < cap && guard < 200000; ++guard) {
        if (!send(MockBackend::event_for(sc.filler))) return count(true), false;
        count(false);
        ++sent;
      }
      send(finish_event(sent == cap ? "length" : "stop"));
      send("data: [DONE]\n\n");
      sink.done();
      return true;
    });
  });
}

MockBackend::~MockBackend() { stop(); }

int MockBackend::start() {
  port_ = impl_->server.bind_to_any_port("127.0.0.1");
  thread_ = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return port_;
}

void MockBackend::stop() {
  impl_->server.stop();
  if (thread_.joinable()) thread_.join();
}

std::string MockBackend::url() const { return "http://127.0.0.1:" + std::to_string(port_); }

std::vector<MockRequest> MockBackend::requests() const {
  std::lock_guard<std::mutex> lk(impl_->mu);
  return impl_->requests;
}

std::string MockBackend::served_bytes(std::size_t i) const {
  std::lock_guard<std::mutex> lk(impl_->mu);
  return impl_->served.at(i);
}

struct MockSidecar::Impl {
  httplib::Server server;
};

MockSidecar::MockSidecar(VectorFn fn, int status) : impl_(std::make_unique<Impl>()) {
  impl_->server.Post("/extract", [this, fn, status](const httplib::Request& req, httplib::Response& res) {
    ++calls_;
    if (status != 200) {
      res.status = status;
      res.set_content("{\"error\":\"model not loaded\"}", "application/json");
      return;
    }
    json body = json::parse(req.body, nullptr, false);
    if (body.is_discarded() || !body.contains("question")) {
      res.status = 400;
      return;
    }
    HiddenStateRecord rec;
    rec.trace_id = "extract";
    rec.model_id = body.value("model_id", std::string("mock"));
    rec.vector = fn(body["question"].get<std::string>());
    res.set_content(record_to_json_line(rec), "application/json");
  });
  impl_->server.Get("/health", [](const httplib::Request&, httplib::Response& res) {
    res.set_content("{\"model_id\":\"mock\",\"d\":0}", "application/json");
  });
}

MockSidecar::~MockSidecar() { stop(); }

int MockSidecar::start() {
  port_ = impl_->server.bind_to_any_port("127.0.0.1");
  thread_ = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return port_;
}

void MockSidecar::stop() {
  impl_->server.stop();
  if (thread_.joinable()) thread_.join();
}

std::string MockSidecar::url() const { return "http://127.0.0.1:" + std::to_string(port_); }

ClientResult post_chat(const std::string& url, const std::string& json_body) {
  httplib::Client cli(url);
  cli.set_read_timeout(60);
  ClientResult out;
  auto res = cli.Post("/v1/chat/completions", json_body, "application/json");
  if (!res) return out;
  out.status = res->status;
  out.body = res->body;
  return out;
}

std::vector<std::string> content_deltas(const std::string& sse_body) {
  SseSplitter sp;
  std::vector<std::string> out;
  for (const auto& ev : sp.feed(sse_body))
    if (auto c = delta_content(ev.data)) out.push_back(*c);
  return out;
}

}  // namespace capmon::testing
