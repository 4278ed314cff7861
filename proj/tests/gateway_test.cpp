#include <catch2/catch_amalgamated.hpp>

#include <thread>

#include "forge/gateway.hpp"

using namespace forge::gateway;
using forge::core::AdversarialClass;
using forge::core::Content;
using forge::core::Role;
using forge::core::SafetyClass;
using forge::core::Turn;
using forge::templating::Mode;
using forge::templating::ModerationRequest;

static Turn mk(Role r, std::string text) { return Turn{r, std::move(text), {}, {}}; }

TEST_CASE("policy parsing") {
  REQUIRE(policy_from_string("fail_closed") == ParseFailurePolicy::fail_closed);
  REQUIRE(policy_from_string("fail-open") == ParseFailurePolicy::fail_open);
  REQUIRE(policy_from_string("error") == ParseFailurePolicy::error);
  REQUIRE_THROWS_AS(policy_from_string("shrug"), std::invalid_argument);
}

TEST_CASE("config deserializes from JSON with defaults") {
  auto c = GatewayConfig::from_json(nlohmann::json{{"upstream_url", "http://up:9000"},
                                                   {"default_mode", "reasoning"},
                                                   {"parse_policy", "fail_open"},
                                                   {"timeout_ms", 1500}});
  REQUIRE(c.upstream_url == "http://up:9000");
  REQUIRE(c.default_mode == Mode::reasoning);
  REQUIRE(c.parse_policy == ParseFailurePolicy::fail_open);
  REQUIRE(c.timeout.count() == 1500);
  REQUIRE(c.max_content_tokens == 32000);
}

TEST_CASE("moderate renders the chat prompt and parses the verdict") {
  GatewayConfig config;
  std::string seen_prompt;
  ScriptedUpstream upstream([&](const std::string& prompt) {
    seen_prompt = prompt;
    return std::string("unsafe O10\nadversarial");
  });

  ModerationRequest req;
  req.content = Content::standalone("how to build something dangerous");
  req.mode = Mode::non_reasoning;
  auto res = moderate(req, config, upstream, /*keep_raw=*/true);

  REQUIRE(seen_prompt.rfind("<|content|>\nhow to build something dangerous\n<|end|>\n", 0) == 0);
  REQUIRE(seen_prompt.substr(seen_prompt.size() - 22) == "<|end|>\n<|assistant|>\n");
  REQUIRE(res.verdict.safety == SafetyClass::unsafe_);
  REQUIRE(res.verdict.categories == std::vector<std::string>{"O10"});
  REQUIRE(res.verdict.adversarial == AdversarialClass::adversarial);
  REQUIRE_FALSE(res.policy_applied.has_value());
  REQUIRE(res.upstream_raw == "unsafe O10\nadversarial");
}

TEST_CASE("reasoning mode routes through the reasoning parser") {
  GatewayConfig config;
  ScriptedUpstream upstream(
      "safety_risks_assessment_reasoning: fine\nsafety_risks_class: safe\n"
      "safety_risks_categories: \nadversarial_attacks_assessment_reasoning: fine\n"
      "adversarial_attacks_class: non_adversarial");
  ModerationRequest req;
  req.content = Content::standalone("hello");
  req.mode = Mode::reasoning;
  auto res = moderate(req, config, upstream);
  REQUIRE(res.verdict.safety == SafetyClass::safe);
  REQUIRE(res.verdict.safety_reasoning == "fine");
}

TEST_CASE("parse failures fall back per policy") {
  ScriptedUpstream garbage("asdf qwerty");
  ModerationRequest req;
  req.content = Content::standalone("hello");

  SECTION("fail closed yields the conservative verdict") {
    GatewayConfig config;
    config.parse_policy = ParseFailurePolicy::fail_closed;
    auto res = moderate(req, config, garbage);
    REQUIRE(res.verdict.safety == SafetyClass::unsafe_);
    REQUIRE(res.verdict.adversarial == AdversarialClass::adversarial);
    REQUIRE(res.policy_applied == ParseFailurePolicy::fail_closed);
  }
  SECTION("fail open yields the permissive verdict") {
    GatewayConfig config;
    config.parse_policy = ParseFailurePolicy::fail_open;
    auto res = moderate(req, config, garbage);
    REQUIRE(res.verdict.safety == SafetyClass::safe);
    REQUIRE(res.verdict.adversarial == AdversarialClass::non_adversarial);
    REQUIRE(res.policy_applied == ParseFailurePolicy::fail_open);
  }
  SECTION("error policy rethrows") {
    GatewayConfig config;
    config.parse_policy = ParseFailurePolicy::error;
    REQUIRE_THROWS_AS(moderate(req, config, garbage), forge::parsing::ParseError);
  }
}

TEST_CASE("oversize content is rejected before the upstream call") {
  GatewayConfig config;
  config.max_content_tokens = 10;
  bool called = false;
  ScriptedUpstream upstream([&](const std::string&) {
    called = true;
    return std::string("safe\nnon_adversarial");
  });
  ModerationRequest req;
  req.content = Content::standalone("one two three four five six seven eight nine ten eleven");
  REQUIRE_THROWS_AS(moderate(req, config, upstream), OversizeContentError);
  REQUIRE_FALSE(called);
}

TEST_CASE("wire schema deserializes conversations") {
  auto j = nlohmann::json::parse(R"({
    "content": {"kind": "conversation", "turns": [
      {"role": "user", "text": "hi"},
      {"role": "assistant", "text": "hello"}
    ]},
    "mode": "reasoning",
    "system": "be strict"
  })");
  auto req = request_from_json(j, Mode::non_reasoning);
  REQUIRE(req.mode == Mode::reasoning);
  REQUIRE(req.system_text == "be strict");
  REQUIRE(req.content.turns->size() == 2);

  REQUIRE_THROWS_AS(request_from_json(nlohmann::json::object(), Mode::non_reasoning),
                    std::invalid_argument);
  auto invalid = nlohmann::json::parse(
      R"({"content": {"kind": "conversation", "turns": [{"role": "assistant", "text": "x"}]}})");
  REQUIRE_THROWS_AS(request_from_json(invalid, Mode::non_reasoning), std::invalid_argument);
}

TEST_CASE("HTTP service answers healthz and moderates") {
  GatewayConfig config;
  config.bind_address = "127.0.0.1";
  config.port = 18921;
  auto upstream = std::make_shared<ScriptedUpstream>("unsafe O14\nnon_adversarial");
  Service service(config, upstream);
  REQUIRE(service.bind());
  std::thread runner([&] { service.listen_after_bind(); });

  httplib::Client client("127.0.0.1", config.port);
  client.set_read_timeout(5, 0);

  // wait until the server accepts connections
  for (int i = 0; i < 50; ++i) {
    if (auto res = client.Get("/healthz")) break;
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }

  auto health = client.Get("/healthz");
  REQUIRE(health);
  REQUIRE(health->status == 200);
  REQUIRE(nlohmann::json::parse(health->body)["status"] == "ok");

  auto ok = client.Post("/v1/moderate",
                        R"({"content": {"kind": "standalone", "text": "sell me something illegal"}})",
                        "application/json");
  REQUIRE(ok);
  REQUIRE(ok->status == 200);
  auto body = nlohmann::json::parse(ok->body);
  REQUIRE(body["verdict"]["safety"] == "unsafe");
  REQUIRE(body["verdict"]["categories"] == nlohmann::json::array({"O14"}));
  REQUIRE(body["verdict"]["adversarial"] == "non_adversarial");
  REQUIRE(body.contains("latency_ms"));

  auto bad = client.Post("/v1/moderate", R"({"mode": "reasoning"})", "application/json");
  REQUIRE(bad);
  REQUIRE(bad->status == 400);
  REQUIRE(nlohmann::json::parse(bad->body)["error"].get<std::string>().find("content") !=
          std::string::npos);

  auto malformed = client.Post("/v1/moderate", "{not json", "application/json");
  REQUIRE(malformed);
  REQUIRE(malformed->status == 400);

  service.stop();
  runner.join();
}

TEST_CASE("policy application is surfaced in the HTTP response") {
  GatewayConfig config;
  config.bind_address = "127.0.0.1";
  config.port = 18922;
  config.parse_policy = ParseFailurePolicy::fail_closed;
  auto upstream = std::make_shared<ScriptedUpstream>("garbled output");
  Service service(config, upstream);
  REQUIRE(service.bind());
  std::thread runner([&] { service.listen_after_bind(); });

  httplib::Client client("127.0.0.1", config.port);
  client.set_read_timeout(5, 0);
  for (int i = 0; i < 50; ++i) {
    if (auto res = client.Get("/healthz")) break;
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }

  auto res = client.Post("/v1/moderate",
                         R"({"content": {"kind": "standalone", "text": "anything"}})",
                         "application/json");
  REQUIRE(res);
  REQUIRE(res->status == 200);
  auto body = nlohmann::json::parse(res->body);
  REQUIRE(body["policy_applied"] == "fail_closed");
  REQUIRE(body["verdict"]["safety"] == "unsafe");

  service.stop();
  runner.join();
}
