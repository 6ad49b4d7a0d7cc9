#include <catch2/catch_amalgamated.hpp>

#include <atomic>
#include <cstdlib>
#include <thread>

#include "httplib.h"

#include "arena/gateway.hpp"
#include "arena/http_provider.hpp"
#include "helpers.hpp"

using namespace arena;
using testutil::pd_game;

namespace {

class FakeClock : public Clock {
 public:
  int64_t now_ms() override { return now_; }
  void sleep_ms(int64_t ms) override {
    now_ += ms;
    slept_ += ms;
  }
  int64_t now_ = 0;
  int64_t slept_ = 0;
};

class FailingProvider : public Provider {
 public:
  std::string complete(const std::string&, const DecisionContext&) override {
    ++calls;
    throw ProviderError("connection refused");
  }
  int calls = 0;
};

DecisionContext pd_context(const GameSpec& game) {
  DecisionContext ctx;
  ctx.view.own_index = 1;
  ctx.view.round_index = 1;
  ctx.view.game = &game;
  ctx.labels = {"Stay silent", "Confess"};
  ctx.draw_seed = 1;
  return ctx;
}

ProviderConfig quick_config(const std::string& id, int max_retries = 3) {
  ProviderConfig cfg;
  cfg.provider_id = id;
  cfg.model_id = id;
  cfg.max_retries = max_retries;
  cfg.rate_limit_per_min = 100000;
  return cfg;
}

}  // namespace

TEST_CASE("parse_choice normalizes before matching") {
  std::array<std::string, 2> labels{"Confess", "Stay silent"};
  CHECK(parse_choice("  confess.", labels) == 0);
  CHECK(parse_choice("Confess", labels) == 0);
  CHECK(parse_choice("\"STAY SILENT\"", labels) == 1);
  CHECK(parse_choice("I think I will stay silent this round", labels) == 1);
  CHECK(parse_choice("I would confess or stay silent", labels) == std::nullopt);
  CHECK(parse_choice("no idea", labels) == std::nullopt);
  CHECK(parse_choice("", labels) == std::nullopt);
}

TEST_CASE("parse_choice handles localized labels across scripts") {
  CHECK(parse_choice("avouer", {"Avouer", "Garder le silence"}) == 0);
  CHECK(parse_choice("GARDER LE SILENCE.", {"Avouer", "Garder le silence"}) == 1);
  CHECK(parse_choice("坦白。", {"保持沉默", "坦白"}) == 1);
  CHECK(parse_choice("اعترف", {"التزم الصمت", "اعترف"}) == 1);
  // Decomposed reply matches the precomposed Vietnamese label.
  CHECK(parse_choice("Thú tội", {"Giữ im lặng", "Thú tội"}) == 1);
}

TEST_CASE("parse_choice is label-order invariant") {
  std::mt19937_64 rng(3);
  std::vector<std::pair<std::string, std::string>> pairs = {
      {"Confess", "Stay silent"}, {"Avouer", "Garder le silence"}, {"保持沉默", "坦白"},
      {"Option A", "Option B"}};
  std::vector<std::string> replies = {"confess",   "stay silent", "option b.", "avouer",
                                      "保持沉默",  "garbage",     "Option A",  ""};
  for (const auto& [l0, l1] : pairs) {
    for (const std::string& reply : replies) {
      auto forward = parse_choice(reply, {l0, l1});
      auto swapped = parse_choice(reply, {l1, l0});
      if (forward.has_value()) {
        REQUIRE(swapped.has_value());
        CHECK(*forward == 1 - *swapped);
      } else {
        CHECK_FALSE(swapped.has_value());
      }
    }
  }
}

TEST_CASE("mock provider replays a scripted policy's labels") {
  GameSpec pd = pd_game();
  Gateway gateway;
  gateway.add_provider(quick_config("mock"),
                       std::make_shared<MockProvider>(ScriptedPolicy::tit_for_tat()));
  Decision d = gateway.request_decision("mock", "prompt", pd_context(pd));
  CHECK(d.chosen == 0);
  CHECK(d.raw_reply == "Stay silent");
  CHECK(d.attempts == 1);
  CHECK(d.provider_id == "mock");
}

TEST_CASE("garbage replies are retried with the identical prompt") {
  GameSpec pd = pd_game();
  Gateway gateway;
  gateway.add_provider(
      quick_config("mock", /*max_retries=*/3),
      std::make_shared<MockProvider>(std::vector<std::string>{"hmm", "???", "Confess"}));
  Decision d = gateway.request_decision("mock", "prompt", pd_context(pd));
  CHECK(d.attempts == 3);
  CHECK(d.chosen == 1);
}

TEST_CASE("all-garbage replies end as an unparseable decision") {
  GameSpec pd = pd_game();
  Gateway gateway;
  gateway.add_provider(quick_config("mock", /*max_retries=*/1),
                       std::make_shared<MockProvider>(
                           std::vector<std::string>{"nope", "still nope", "never seen"}));
  CHECK_THROWS_AS(gateway.request_decision("mock", "prompt", pd_context(pd)),
                  UnparseableDecisionError);
}

TEST_CASE("an exhausted reply list is a permanent failure") {
  GameSpec pd = pd_game();
  Gateway gateway;
  gateway.add_provider(quick_config("mock"),
                       std::make_shared<MockProvider>(std::vector<std::string>{}));
  CHECK_THROWS_WITH(gateway.request_decision("mock", "prompt", pd_context(pd)),
                    Catch::Matchers::ContainsSubstring("sequence exhausted"));
}

TEST_CASE("transport failures back off exponentially and then give up") {
  GameSpec pd = pd_game();
  FakeClock clock;
  Gateway gateway(clock);
  auto failing = std::make_shared<FailingProvider>();
  gateway.add_provider(quick_config("down", /*max_retries=*/1), failing);
  CHECK_THROWS_WITH(gateway.request_decision("down", "prompt", pd_context(pd)),
                    Catch::Matchers::ContainsSubstring("provider unavailable"));
  CHECK(failing->calls == 2);  // 1 try + 1 retry
  CHECK(clock.slept_ == Gateway::kBackoffBaseMs);

  auto failing2 = std::make_shared<FailingProvider>();
  FakeClock clock2;
  Gateway gateway2(clock2);
  gateway2.add_provider(quick_config("down2", /*max_retries=*/3), failing2);
  CHECK_THROWS_AS(gateway2.request_decision("down2", "prompt", pd_context(pd)), ProviderError);
  CHECK(failing2->calls == 4);
  CHECK(clock2.slept_ == Gateway::kBackoffBaseMs * (1 + 2 + 4));
}

TEST_CASE("decisions never fabricate: the reply contains the chosen label") {
  GameSpec pd = pd_game();
  std::vector<std::string> replies = {"I'll Confess!",      "stay silent",  "«Confess»",
                                      "My answer: CONFESS", "Stay silent.", "Confess"};
  Gateway gateway;
  gateway.add_provider(quick_config("mock"), std::make_shared<MockProvider>(replies));
  for (size_t i = 0; i < replies.size(); ++i) {
    Decision d = gateway.request_decision("mock", "prompt", pd_context(pd));
    CHECK(contains(case_fold(nfc(d.raw_reply)), case_fold(nfc(d.chosen_label))));
  }
}

TEST_CASE("rate limiter keeps any 60s window under the limit") {
  FakeClock clock;
  RateLimiter limiter(5, clock);
  std::vector<int64_t> sent;
  for (int i = 0; i < 23; ++i) {
    limiter.acquire();
    sent.push_back(clock.now_ms());
    clock.sleep_ms(1000);  // request pacing: ~1/s, above the 5/min budget
  }
  for (int64_t t0 : sent) {
    int in_window = 0;
    for (int64_t t : sent)
      if (t >= t0 && t < t0 + 60000) ++in_window;
    CHECK(in_window <= 5);
  }
  CHECK(sent.size() == 23);
  CHECK(std::is_sorted(sent.begin(), sent.end()));
}

TEST_CASE("prompt must be non-empty") {
  GameSpec pd = pd_game();
  Gateway gateway;
  gateway.add_provider(quick_config("mock"),
                       std::make_shared<MockProvider>(ScriptedPolicy::always_first()));
  CHECK_THROWS_AS(gateway.request_decision("mock", "", pd_context(pd)), ValidationError);
}

TEST_CASE("http provider speaks the chat-completion wire shape") {
  ::setenv("ARENA_TEST_KEY", "test-key-123", 1);

  httplib::Server server;
  std::string seen_auth, seen_body;
  std::atomic<int> hits{0};
  server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    ++hits;
    seen_auth = req.get_header_value("Authorization");
    seen_body = req.body;
    res.set_content(R"({"choices":[{"message":{"role":"assistant","content":"Confess"}}]})",
                    "application/json");
  });
  int port = server.bind_to_any_port("127.0.0.1");
  REQUIRE(port > 0);
  std::thread server_thread([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  ProviderConfig cfg = quick_config("remote");
  cfg.endpoint_url = "http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions";
  cfg.model_id = "test-model";
  cfg.temperature = 0.9;
  cfg.top_p = 0.6;
  cfg.top_k = 40;
  cfg.api_key_env = "ARENA_TEST_KEY";

  GameSpec pd = pd_game();
  uint64_t attempts_before = network_attempts().load();
  Gateway gateway;
  gateway.add_provider(cfg, std::make_shared<HttpProvider>(cfg));
  Decision d = gateway.request_decision("remote", "the prompt", pd_context(pd));
  CHECK(d.chosen == 1);
  CHECK(d.raw_reply == "Confess");
  CHECK(network_attempts().load() == attempts_before + 1);
  CHECK(seen_auth == "Bearer test-key-123");

  nlohmann::json body = nlohmann::json::parse(seen_body);
  CHECK(body["model"] == "test-model");
  CHECK(body["messages"][0]["role"] == "user");
  CHECK(body["messages"][0]["content"] == "the prompt");
  CHECK(body["temperature"] == Catch::Approx(0.9));
  CHECK(body["top_p"] == Catch::Approx(0.6));
  CHECK(body["top_k"] == 40);

  server.stop();
  server_thread.join();
}

TEST_CASE("http 500s are retried and reported as provider unavailable") {
  httplib::Server server;
  std::atomic<int> hits{0};
  server.Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
    ++hits;
    res.status = 500;
  });
  int port = server.bind_to_any_port("127.0.0.1");
  std::thread server_thread([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  ProviderConfig cfg = quick_config("flaky", /*max_retries=*/2);
  cfg.endpoint_url = "http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions";

  GameSpec pd = pd_game();
  FakeClock clock;
  Gateway gateway(clock);
  gateway.add_provider(cfg, std::make_shared<HttpProvider>(cfg));
  CHECK_THROWS_WITH(gateway.request_decision("flaky", "prompt", pd_context(pd)),
                    Catch::Matchers::ContainsSubstring("provider unavailable"));
  CHECK(hits == 3);

  server.stop();
  server_thread.join();
}

TEST_CASE("unreachable endpoints surface as provider errors") {
  ProviderConfig cfg = quick_config("gone", /*max_retries=*/1);
  cfg.endpoint_url = "http://127.0.0.1:1/v1/chat/completions";
  cfg.timeout_ms = 500;

  GameSpec pd = pd_game();
  FakeClock clock;
  Gateway gateway(clock);
  gateway.add_provider(cfg, std::make_shared<HttpProvider>(cfg));
  CHECK_THROWS_AS(gateway.request_decision("gone", "prompt", pd_context(pd)), ProviderError);
}

TEST_CASE("per-provider concurrency stays under the configured cap") {
  class SlowProvider : public Provider {
   public:
    std::string complete(const std::string&, const DecisionContext&) override {
      int now = ++in_flight;
      int seen = max_seen.load();
      while (now > seen && !max_seen.compare_exchange_weak(seen, now)) {
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(20));
      --in_flight;
      return "Confess";
    }
    std::atomic<int> in_flight{0};
    std::atomic<int> max_seen{0};
  };

  GameSpec pd = pd_game();
  auto slow = std::make_shared<SlowProvider>();
  ProviderConfig cfg = quick_config("slow");
  cfg.max_concurrent = 2;
  Gateway gateway;
  gateway.add_provider(cfg, slow);

  std::vector<std::thread> threads;
  for (int i = 0; i < 8; ++i)
    threads.emplace_back([&] { gateway.request_decision("slow", "prompt", pd_context(pd)); });
  for (auto& t : threads) t.join();
  CHECK(slow->max_seen.load() <= 2);
  CHECK(slow->max_seen.load() >= 1);
}

TEST_CASE("a missing API key is a configuration error at startup") {
  ::unsetenv("ARENA_MISSING_KEY");
  ProviderConfig cfg = quick_config("remote");
  cfg.endpoint_url = "http://127.0.0.1:9999/v1/chat/completions";
  cfg.api_key_env = "ARENA_MISSING_KEY";
  Gateway gateway;
  CHECK_THROWS_AS(gateway.add_provider(cfg, std::make_shared<HttpProvider>(cfg)), ConfigError);
}
