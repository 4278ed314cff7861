#ifndef FORGE_GATEWAY_HPP
#define FORGE_GATEWAY_HPP

#include <chrono>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>

#include <httplib.h>
#include <json.hpp>

#include "forge/core.hpp"
#include "forge/parsing.hpp"
#include "forge/templating.hpp"

namespace forge::gateway {

using core::Content;
using core::Verdict;
using templating::Mode;
using templating::ModerationRequest;

enum class ParseFailurePolicy { fail_closed, fail_open, error };

inline std::string to_string(ParseFailurePolicy p) {
  switch (p) {
    case ParseFailurePolicy::fail_closed: return "fail_closed";
    case ParseFailurePolicy::fail_open: return "fail_open";
    case ParseFailurePolicy::error: return "error";
  }
  throw std::logic_error("bad policy");
}

inline ParseFailurePolicy policy_from_string(const std::string& s) {
  if (s == "fail_closed" || s == "fail-closed") return ParseFailurePolicy::fail_closed;
  if (s == "fail_open" || s == "fail-open") return ParseFailurePolicy::fail_open;
  if (s == "error") return ParseFailurePolicy::error;
  throw std::invalid_argument("unknown parse-failure policy: " + s);
}

struct GatewayConfig {
  std::string upstream_url;                 // e.g. http://host:port
  std::string upstream_path = "/v1/completions";
  std::string credential_env = "FORGE_UPSTREAM_TOKEN";  // env var holding the bearer token
  Mode default_mode = Mode::non_reasoning;
  ParseFailurePolicy parse_policy = ParseFailurePolicy::fail_closed;
  std::chrono::milliseconds timeout{30000};
  std::uint64_t max_content_tokens = core::ContentRecord::kMaxTokens;
  std::size_t max_retries = 2;
  int port = 8080;
  std::string bind_address = "0.0.0.0";

  static GatewayConfig from_json(const nlohmann::json& j) {
    GatewayConfig c;
    c.upstream_url = j.value("upstream_url", c.upstream_url);
    c.upstream_path = j.value("upstream_path", c.upstream_path);
    c.credential_env = j.value("credential_env", c.credential_env);
    if (j.contains("default_mode"))
      c.default_mode = templating::mode_from_string(j["default_mode"].get<std::string>());
    if (j.contains("parse_policy"))
      c.parse_policy = policy_from_string(j["parse_policy"].get<std::string>());
    if (j.contains("timeout_ms")) c.timeout = std::chrono::milliseconds(j["timeout_ms"].get<int>());
    c.max_content_tokens = j.value("max_content_tokens", c.max_content_tokens);
    c.max_retries = j.value("max_retries", c.max_retries);
    c.port = j.value("port", c.port);
    c.bind_address = j.value("bind_address", c.bind_address);
    return c;
  }
};

class OversizeContentError : public std::runtime_error {
 public:
  explicit OversizeContentError(std::uint64_t tokens, std::uint64_t limit)
      : std::runtime_error("content of " + std::to_string(tokens) +
                           " tokens exceeds the limit of " + std::to_string(limit)) {}
};

class UpstreamError : public std::runtime_error {
 public:
  UpstreamError(const std::string& what, std::size_t retries)
      : std::runtime_error(what + " (after " + std::to_string(retries) + " retries)"),
        retries_(retries) {}
  std::size_t retries() const { return retries_; }

 private:
  std::size_t retries_;
};

// Completes a rendered chat prompt into raw model output.
struct Upstream {
  virtual ~Upstream() = default;
  virtual std::string complete(const std::string& rendered_prompt) = 0;
};

// Fixed-response stub for tests and offline runs.
class ScriptedUpstream : public Upstream {
 public:
  explicit ScriptedUpstream(std::function<std::string(const std::string&)> fn)
      : fn_(std::move(fn)) {}
  explicit ScriptedUpstream(std::string fixed)
      : fn_([fixed = std::move(fixed)](const std::string&) { return fixed; }) {}
  std::string complete(const std::string& prompt) override { return fn_(prompt); }

 private:
  std::function<std::string(const std::string&)> fn_;
};

class HttpUpstream : public Upstream {
 public:
  explicit HttpUpstream(const GatewayConfig& config) : config_(config) {}

  std::string complete(const std::string& rendered_prompt) override {
    httplib::Client client(config_.upstream_url);
    client.set_read_timeout(std::chrono::duration_cast<std::chrono::seconds>(config_.timeout));
    httplib::Headers headers;
    if (const char* token = std::getenv(config_.credential_env.c_str()))
      headers.emplace("Authorization", std::string("Bearer ") + token);
    nlohmann::json body{{"prompt", rendered_prompt}};
    std::size_t attempt = 0;
    for (;;) {
      auto res = client.Post(config_.upstream_path, headers, body.dump(), "application/json");
      if (res && res->status == 200) {
        auto j = nlohmann::json::parse(res->body);
        if (j.contains("text")) return j["text"].get<std::string>();
        return res->body;
      }
      if (++attempt > config_.max_retries)
        throw UpstreamError(res ? "upstream returned status " + std::to_string(res->status)
                                : "upstream unreachable",
                            config_.max_retries);
    }
  }

 private:
  GatewayConfig config_;
};

struct ModerationResponse {
  Verdict verdict;
  std::chrono::milliseconds latency{0};
  std::optional<std::string> upstream_raw;
  std::optional<ParseFailurePolicy> policy_applied;
};

inline ModerationResponse moderate(const ModerationRequest& request, const GatewayConfig& config,
                                   Upstream& upstream, bool keep_raw = false) {
  const auto tokens = core::count_tokens(templating::serialize_content(request.content));
  if (tokens > config.max_content_tokens)
    throw OversizeContentError(tokens, config.max_content_tokens);

  const auto start = std::chrono::steady_clock::now();
  const std::string raw = upstream.complete(templating::render_chat(request));
  ModerationResponse response;
  response.latency = std::chrono::duration_cast<std::chrono::milliseconds>(
      std::chrono::steady_clock::now() - start);
  if (keep_raw) response.upstream_raw = raw;

  try {
    response.verdict = request.mode == Mode::reasoning ? parsing::parse_reasoning(raw)
                                                       : parsing::parse_non_reasoning(raw);
  } catch (const parsing::ParseError&) {
    switch (config.parse_policy) {
      case ParseFailurePolicy::fail_closed:
        response.verdict.safety = core::SafetyClass::unsafe_;
        response.verdict.adversarial = core::AdversarialClass::adversarial;
        break;
      case ParseFailurePolicy::fail_open:
        response.verdict.safety = core::SafetyClass::safe;
        response.verdict.adversarial = core::AdversarialClass::non_adversarial;
        break;
      case ParseFailurePolicy::error:
        throw;
    }
    response.policy_applied = config.parse_policy;
  }
  return response;
}

// ---- HTTP service ----

inline nlohmann::json verdict_to_json(const Verdict& v) {
  nlohmann::json j{{"safety", core::to_string(v.safety)},
                   {"categories", v.categories},
                   {"adversarial", core::to_string(v.adversarial)}};
  if (v.safety_reasoning) j["safety_reasoning"] = *v.safety_reasoning;
  if (v.adversarial_reasoning) j["adversarial_reasoning"] = *v.adversarial_reasoning;
  return j;
}

// Wire schema mirrors the core types: {content: {kind, text|turns}, mode?, system?}.
inline ModerationRequest request_from_json(const nlohmann::json& j, Mode default_mode) {
  ModerationRequest req;
  if (!j.contains("content")) throw std::invalid_argument("missing field: content");
  req.content = core::content_from_json(j["content"]);
  req.content.validate();
  req.mode = j.contains("mode") ? templating::mode_from_string(j["mode"].get<std::string>())
                                : default_mode;
  if (j.contains("system")) req.system_text = j["system"].get<std::string>();
  return req;
}

class Service {
 public:
  Service(GatewayConfig config, std::shared_ptr<Upstream> upstream)
      : config_(std::move(config)), upstream_(std::move(upstream)) {
    server_.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
      res.set_content("{\"status\":\"ok\"}", "application/json");
    });
    server_.Post("/v1/moderate", [this](const httplib::Request& req, httplib::Response& res) {
      handle_moderate(req, res);
    });
  }

  // Blocks until stop(). Returns false on bind failure.
  bool listen() { return server_.listen(config_.bind_address, config_.port); }
  bool bind() { return server_.bind_to_port(config_.bind_address, config_.port); }
  bool listen_after_bind() { return server_.listen_after_bind(); }
  void stop() { server_.stop(); }

 private:
  void handle_moderate(const httplib::Request& req, httplib::Response& res) {
    nlohmann::json body;
    ModerationRequest request;
    try {
      body = nlohmann::json::parse(req.body);
      request = request_from_json(body, config_.default_mode);
    } catch (const std::exception& e) {
      res.status = 400;
      res.set_content(nlohmann::json{{"error", e.what()}}.dump(), "application/json");
      return;
    }
    try {
      auto response = moderate(request, config_, *upstream_);
      nlohmann::json out{{"verdict", verdict_to_json(response.verdict)},
                         {"latency_ms", response.latency.count()}};
      if (response.policy_applied) out["policy_applied"] = to_string(*response.policy_applied);
      res.set_content(out.dump(), "application/json");
    } catch (const OversizeContentError& e) {
      res.status = 413;
      res.set_content(nlohmann::json{{"error", e.what()}}.dump(), "application/json");
    } catch (const std::exception& e) {
      res.status = 502;
      res.set_content(nlohmann::json{{"error", e.what()}}.dump(), "application/json");
    }
  }

  GatewayConfig config_;
  std::shared_ptr<Upstream> upstream_;
  httplib::Server server_;
};

}  // namespace forge::gateway

#endif  // FORGE_GATEWAY_HPP
