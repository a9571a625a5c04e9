#include "capmon/proxy.hpp"

#include <chrono>
#include <functional>
#include <filesystem>

// Eigen must come before httplib: <resolv.h> defines a macro named _res.
#include "capmon/errors.hpp"
#include "capmon/hidden_record.hpp"
#include "capmon/monitor.hpp"
#include "capmon/probe.hpp"

#include <httplib.h>
#include <json.hpp>

namespace capmon {

using nlohmann::json;

// ---------------------------------------------------------------------------
// SSE helpers

std::vector<SseSplitter::Event> SseSplitter::feed(std::string_view bytes) {
  buf_.append(bytes);
  std::vector<Event> out;
  std::size_t start = 0;
  for (;;) {
    // An event ends at the first empty line; accept LF and CRLF endings.
    std::size_t end = std::string::npos, term = 0;
    for (std::size_t i = start; i < buf_.size(); ++i) {
      if (buf_[i] != '\n') continue;
      if (i + 1 < buf_.size() && buf_[i + 1] == '\n') {
        end = i;
        term = 2;
        break;
      }
      if (i + 2 < buf_.size() && buf_[i + 1] == '\r' && buf_[i + 2] == '\n') {
        end = i;
        term = 3;
        break;
      }
    }
    if (end == std::string::npos) break;
    Event ev;
    ev.raw = buf_.substr(start, end + term - start);
    std::string_view block(buf_.data() + start, end - start);
    std::size_t pos = 0;
    while (pos <= block.size()) {
      std::size_t nl = block.find('\n', pos);
      std::string_view line = block.substr(pos, nl == std::string_view::npos ? block.size() - pos : nl - pos);
      if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
      if (line.substr(0, 5) == "data:") {
        std::string_view v = line.substr(5);
        if (!v.empty() && v.front() == ' ') v.remove_prefix(1);
        if (!ev.data.empty()) ev.data.push_back('\n');
        ev.data.append(v);
      }
      if (nl == std::string_view::npos) break;
      pos = nl + 1;
    }
    out.push_back(std::move(ev));
    start = end + term;
  }
  buf_.erase(0, start);
  return out;
}

std::string SseSplitter::take_rest() {
  std::string r = std::move(buf_);
  buf_.clear();
  return r;
}

std::optional<std::string> delta_content(std::string_view data) {
  if (data.empty() || data == "[DONE]") return std::nullopt;
  json j = json::parse(data.begin(), data.end(), nullptr, false);
  if (j.is_discarded() || !j.is_object()) return std::nullopt;
  auto ch = j.find("choices");
  if (ch == j.end() || !ch->is_array() || ch->empty()) return std::nullopt;
  const auto& c0 = (*ch)[0];
  auto d = c0.find("delta");
  if (d == c0.end() || !d->is_object()) return std::nullopt;
  auto c = d->find("content");
  if (c == d->end() || !c->is_string()) return std::nullopt;
  return c->get<std::string>();
}

// ---------------------------------------------------------------------------
// Server

namespace {

Strategy strategy_for(PolicyMode m) {
  switch (m) {
    case PolicyMode::None: return Strategy::Original;
    case PolicyMode::BoostAbstention: return Strategy::BoostAbstention;
    case PolicyMode::ExpressMonitor: return Strategy::MonitorExpress;
    case PolicyMode::HiddenMonitor: return Strategy::MonitorHidden;
  }
  return Strategy::Original;
}

std::string sse(const json& j) { return "data: " + j.dump() + "\n\n"; }

json chunk(const std::string& id, const std::string& model, json delta,
           const json& finish = nullptr) {
  return {{"id", id},
          {"object", "chat.completion.chunk"},
          {"model", model},
          {"choices", json::array({{{"index", 0}, {"delta", std::move(delta)}, {"finish_reason", finish}}})}};
}

json error_body(const std::string& msg, const std::string& type) {
  return {{"error", {{"message", msg}, {"type", type}}}};
}

enum class StreamEnd { Completed, Intervene, BudgetCut, ClientGone, Error };

using Emit = std::function<bool(std::string_view)>;

}  // namespace

struct ProxyServer::Impl {
  ProxyConfig cfg;
  std::shared_ptr<const Matcher> matcher;
  httplib::Server server;
  mutable std::mutex mu;
  std::vector<ReasoningTrace> traces;
  std::atomic<std::uint64_t> counter{0};

  std::string next_session_id() {
    auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                  std::chrono::system_clock::now().time_since_epoch())
                  .count();
    return "sess-" + std::to_string(ms) + "-" + std::to_string(counter.fetch_add(1));
  }

  BoundaryVerdict query_sidecar(const std::string& question, const std::string& model,
                                const ProbeModel& probe) {
    if (cfg.sidecar_url.empty()) throw UpstreamError("no extractor sidecar configured");
    httplib::Client sc(cfg.sidecar_url);
    sc.set_connection_timeout(5);
    sc.set_read_timeout(60);
    json rq = {{"question", question}, {"model_id", model}, {"layer", "final"}, {"chat_template", true}};
    auto res = sc.Post("/extract", rq.dump(), "application/json");
    if (!res) throw UpstreamError("sidecar unreachable: " + httplib::to_string(res.error()));
    if (res->status != 200)
      throw UpstreamError("sidecar returned status " + std::to_string(res->status));
    HiddenStateRecord rec;
    try {
      rec = record_from_json(res->body);
    } catch (const ValidationError& e) {
      throw UpstreamError(std::string("sidecar sent a bad record: ") + e.what());
    }
    if (rec.vector.size() != probe.dim())
      throw UpstreamError("sidecar vector has dimension " + std::to_string(rec.vector.size()) +
                          ", probe expects " + std::to_string(probe.dim()));
    return predict(probe, rec.vector);
  }

  // Streams one upstream generation, feeding content deltas to the session
  // and relaying event bytes unchanged.
  StreamEnd stream_upstream(const json& body, MonitorSession& session, const Emit& emit,
                            std::string& error) {
    httplib::Client cli(cfg.backend_url);
    cli.set_connection_timeout(10);
    cli.set_read_timeout(cfg.upstream_timeout_s);

    httplib::Request req;
    req.method = "POST";
    req.path = "/v1/chat/completions";
    req.headers.emplace("Content-Type", "application/json");
    req.headers.emplace("Accept", "text/event-stream");
    req.body = body.dump();

    int status = 0;
    std::string err_body;
    SseSplitter splitter;
    std::optional<StreamEnd> end;
    req.response_handler = [&](const httplib::Response& r) {
      status = r.status;
      return true;
    };
    req.content_receiver = [&](const char* data, std::size_t len, std::uint64_t, std::uint64_t) {
      if (status != 200) {
        err_body.append(data, len);
        return true;
      }
      for (auto& ev : splitter.feed({data, len})) {
        auto content = delta_content(ev.data);
        if (content && !content->empty()) {
          if (session.remaining_budget() == 0) {
            end = StreamEnd::BudgetCut;
            return false;
          }
          TokenResult tr = session.on_token(*content);
          if (!emit(ev.raw)) {
            end = StreamEnd::ClientGone;
            return false;
          }
          if (tr.action.kind == ActionKind::StopAndReprompt) {
            end = StreamEnd::Intervene;
            return false;
          }
          if (tr.budget_reached) {
            end = StreamEnd::BudgetCut;
            return false;
          }
        } else if (!emit(ev.raw)) {
          end = StreamEnd::ClientGone;
          return false;
        }
      }
      return true;
    };

    httplib::Response res;
    httplib::Error err = httplib::Error::Success;
    bool ok = cli.send(req, res, err);
    if (end) return *end;
    if (!ok) {
      error = "backend unreachable: " + httplib::to_string(err);
      return StreamEnd::Error;
    }
    if (status != 200) {
      error = "backend returned status " + std::to_string(status) + ": " + err_body;
      return StreamEnd::Error;
    }
    std::string rest = splitter.take_rest();
    if (!rest.empty() && !emit(rest)) return StreamEnd::ClientGone;
    return StreamEnd::Completed;
  }

  struct Ctx {
    std::string id;
    std::string model;
    std::string question;
    json body;
    InterventionPolicy policy;
    std::size_t budget = 0;
    std::optional<BoundaryVerdict> hidden;
    std::string note;
  };

  ReasoningTrace run_session(Ctx& ctx, const Emit& emit) {
    MonitorConfig mc = cfg.policy.monitor;
    mc.context_budget = ctx.budget;
    MonitorSession session(ctx.id, ctx.question, ctx.policy, mc, matcher);
    Action first = session.begin(ctx.hidden);

    json up = ctx.body;
    up["stream"] = true;
    up["max_tokens"] = ctx.budget;
    up.erase("capmon_policy");
    if (first.kind == ActionKind::InjectSystemPrompt) {
      json msgs = json::array({{{"role", "system"}, {"content", first.payload}}});
      for (auto& m : up["messages"]) msgs.push_back(m);
      up["messages"] = std::move(msgs);
    }
    bool client_ok = true;
    if (first.kind == ActionKind::ForcePrefix) {
      json c = chunk(ctx.id, ctx.model, {{"role", "assistant"}, {"content", first.payload}});
      c["capmon"] = {{"intervention", "force_prefix"}};
      client_ok = emit(sse(c));
      up["messages"].push_back({{"role", "assistant"}, {"content", first.payload}});
      up["continue_final_message"] = true;
      up["add_generation_prompt"] = false;
    }

    std::string error;
    StreamEnd end = client_ok ? stream_upstream(up, session, emit, error) : StreamEnd::ClientGone;
    if (end == StreamEnd::Intervene) {
      json marker = chunk(ctx.id, ctx.model, json::object());
      marker["capmon"] = {{"intervention", "stop_and_reprompt"},
                          {"stage_percent", session.intervention_stage().value_or(0.0)},
                          {"tokens_emitted", session.tokens_emitted()}};
      if (!emit(sse(marker))) {
        end = StreamEnd::ClientGone;
      } else if (session.remaining_budget() == 0) {
        end = StreamEnd::BudgetCut;
      } else {
        json re = {{"model", ctx.model},
                   {"messages", json::array({{{"role", "user"}, {"content", render_reprompt(ctx.question)}}})},
                   {"stream", true},
                   {"max_tokens", session.remaining_budget()}};
        end = stream_upstream(re, session, emit, error);
      }
    }

    if (end == StreamEnd::BudgetCut) {
      emit(sse(chunk(ctx.id, ctx.model, json::object(), "length")));
      emit("data: [DONE]\n\n");
    }
    if (end == StreamEnd::Error) {
      emit(sse(error_body(error, "upstream_error")));
      emit("data: [DONE]\n\n");
      session.fail(error);
    } else {
      session.finish();
    }

    ReasoningTrace t = session.to_trace(strategy_for(ctx.policy.mode), ctx.model, "live");
    if (t.model_id.empty()) t.model_id = "unknown";
    if (!ctx.note.empty()) t.error = t.error.empty() ? ctx.note : ctx.note + "; " + t.error;
    persist(t);
    return t;
  }

  void persist(const ReasoningTrace& t) {
    if (!cfg.trace_dir.empty()) {
      try {
        std::filesystem::create_directories(cfg.trace_dir);
        append_trace_file((std::filesystem::path(cfg.trace_dir) / (t.trace_id + ".jsonl")).string(), t);
      } catch (const std::exception&) {
        // Persistence failures never break the client stream.
      }
    }
    std::lock_guard<std::mutex> lk(mu);
    traces.push_back(t);
  }

  void handle_chat(const httplib::Request& req, httplib::Response& res) {
    auto fail = [&](int code, const std::string& msg, const std::string& type) {
      res.status = code;
      res.set_content(error_body(msg, type).dump(), "application/json");
    };
    json body = json::parse(req.body, nullptr, false);
    if (body.is_discarded() || !body.is_object())
      return fail(400, "request body is not a JSON object", "invalid_request_error");
    if (!body.contains("messages") || !body["messages"].is_array() || body["messages"].empty())
      return fail(400, "messages must be a non-empty array", "invalid_request_error");

    auto ctx = std::make_shared<Ctx>();
    ctx->id = next_session_id();
    ctx->body = body;
    ctx->model = body.value("model", std::string{});
    for (const auto& m : body["messages"])
      if (m.is_object() && m.value("role", "") == "user" && m.contains("content") &&
          m["content"].is_string())
        ctx->question = m["content"].get<std::string>();
    if (ctx->question.empty())
      return fail(400, "no user message with string content", "invalid_request_error");

    ctx->policy = cfg.policy.policy;
    if (body.contains("capmon_policy")) {
      try {
        ctx->policy.mode = policy_mode_from_string(body["capmon_policy"].get<std::string>());
        ctx->policy.validate();
      } catch (const std::exception& e) {
        return fail(400, e.what(), "invalid_request_error");
      }
    }
    ctx->budget = cfg.policy.monitor.context_budget;
    if (body.contains("max_tokens") && !body["max_tokens"].is_null()) {
      if (!body["max_tokens"].is_number_unsigned() || body["max_tokens"].get<std::size_t>() == 0)
        return fail(400, "max_tokens must be a positive integer", "invalid_request_error");
      ctx->budget = body["max_tokens"].get<std::size_t>();
    }

    if (ctx->policy.mode == PolicyMode::HiddenMonitor) {
      try {
        ctx->hidden = query_sidecar(ctx->question, ctx->model, *ctx->policy.probe);
        ctx->hidden->trace_id = ctx->id;
      } catch (const UpstreamError& e) {
        if (!cfg.policy.sidecar_fail_open)
          return fail(503, std::string("hidden-state sidecar unavailable: ") + e.what(), "sidecar_error");
        ctx->note = std::string("unmonitored: ") + e.what();
      }
    }

    const bool stream = body.value("stream", false);
    if (stream) {
      res.set_header("Cache-Control", "no-cache");
      res.set_chunked_content_provider(
          "text/event-stream", [this, ctx](std::size_t, httplib::DataSink& sink) {
            run_session(*ctx, [&](std::string_view s) { return sink.write(s.data(), s.size()); });
            sink.done();
            return true;
          });
      return;
    }

    std::string bytes;
    ReasoningTrace t = run_session(*ctx, [&](std::string_view s) {
      bytes.append(s);
      return true;
    });
    SseSplitter sp;
    std::string content, finish = "stop";
    for (const auto& ev : sp.feed(bytes)) {
      if (auto c = delta_content(ev.data)) content += *c;
      json j = json::parse(ev.data, nullptr, false);
      if (j.is_object() && j.contains("error") && !j.contains("choices"))
        return fail(502, j["error"].value("message", "upstream error"), "upstream_error");
      if (j.is_object() && j.contains("choices") && j["choices"].is_array() && !j["choices"].empty() &&
          j["choices"][0].contains("finish_reason") && j["choices"][0]["finish_reason"].is_string())
        finish = j["choices"][0]["finish_reason"].get<std::string>();
    }
    json out = {{"id", ctx->id},
                {"object", "chat.completion"},
                {"model", ctx->model},
                {"choices", json::array({{{"index", 0},
                                          {"message", {{"role", "assistant"}, {"content", content}}},
                                          {"finish_reason", finish}}})},
                {"usage", {{"completion_tokens", t.total_tokens}}},
                {"capmon", {{"intervened", t.intervened}, {"overflowed", t.overflowed}}}};
    res.set_content(out.dump(), "application/json");
  }
};

ProxyServer::ProxyServer(ProxyConfig config, std::shared_ptr<const Matcher> matcher)
    : impl_(std::make_unique<Impl>()) {
  impl_->cfg = std::move(config);
  impl_->matcher = matcher ? std::move(matcher) : std::make_shared<const Matcher>(default_lexicon());
  impl_->cfg.policy.policy.validate();
  impl_->cfg.policy.monitor.validate();
  if (impl_->cfg.policy.policy.mode == PolicyMode::HiddenMonitor && impl_->cfg.sidecar_url.empty() &&
      !impl_->cfg.policy.sidecar_fail_open)
    throw ConfigError("hidden_monitor with fail-closed sidecar handling needs a sidecar address");

  auto* impl = impl_.get();
  impl->server.Post("/v1/chat/completions", [impl](const httplib::Request& rq, httplib::Response& rs) {
    impl->handle_chat(rq, rs);
  });
  impl->server.Get("/health", [impl](const httplib::Request&, httplib::Response& rs) {
    const auto& p = impl->cfg.policy.policy;
    json h = {{"status", "ok"},
              {"version", std::string(kVersion)},
              {"policy", std::string(to_string(p.mode))},
              {"detector", std::string(to_string(p.detector))},
              {"context_budget", impl->cfg.policy.monitor.context_budget}};
    rs.set_content(h.dump(), "application/json");
  });
}

ProxyServer::~ProxyServer() { stop(); }

int ProxyServer::bind() {
  auto& c = impl_->cfg;
  if (c.listen_port == 0) {
    port_ = impl_->server.bind_to_any_port(c.listen_host);
    if (port_ <= 0) throw ConfigError("cannot bind " + c.listen_host);
  } else {
    if (!impl_->server.bind_to_port(c.listen_host, c.listen_port))
      throw ConfigError("cannot bind " + c.listen_host + ":" + std::to_string(c.listen_port));
    port_ = c.listen_port;
  }
  return port_;
}

void ProxyServer::run() { impl_->server.listen_after_bind(); }

int ProxyServer::start() {
  int p = bind();
  thread_ = std::thread([this] { run(); });
  impl_->server.wait_until_ready();
  return p;
}

void ProxyServer::stop() {
  if (impl_) impl_->server.stop();
  if (thread_.joinable()) thread_.join();
}

std::vector<ReasoningTrace> ProxyServer::completed_traces() const {
  std::lock_guard<std::mutex> lk(impl_->mu);
  return impl_->traces;
}

}  // namespace capmon
