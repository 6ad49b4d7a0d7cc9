#pragma once

#include <cstdlib>
#include <string>

#include "httplib.h"
#include "json.hpp"

#include "arena/errors.hpp"
#include "arena/gateway.hpp"

namespace arena {

namespace http_detail {

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

inline SplitUrl split_url(const std::string& url) {
  size_t scheme = url.find("://");
  if (scheme == std::string::npos) throw ConfigError("endpoint_url needs a scheme: " + url);
  size_t path = url.find('/', scheme + 3);
  if (path == std::string::npos) return {url, "/"};
  return {url.substr(0, path), url.substr(path)};
}

}  // namespace http_detail

/// Single-message chat completion in the OpenAI-compatible wire shape.
/// Throws ProviderError on any transport or protocol failure.
inline std::string http_post_chat(const ProviderConfig& cfg, const std::string& prompt) {
  network_attempts().fetch_add(1, std::memory_order_relaxed);

  nlohmann::ordered_json body{
      {"model", cfg.model_id},
      {"messages", nlohmann::ordered_json::array({{{"role", "user"}, {"content", prompt}}})},
      {"temperature", cfg.temperature},
      {"top_p", cfg.top_p},
  };
  if (cfg.top_k.has_value()) body["top_k"] = *cfg.top_k;

  http_detail::SplitUrl url = http_detail::split_url(cfg.endpoint_url);
  httplib::Client client(url.origin);
  client.set_connection_timeout(0, cfg.timeout_ms * 1000LL);
  client.set_read_timeout(0, cfg.timeout_ms * 1000LL);

  httplib::Headers headers;
  if (!cfg.api_key_env.empty()) {
    const char* key = std::getenv(cfg.api_key_env.c_str());
    if (key == nullptr)
      throw PermanentProviderError("missing API key: environment variable " + cfg.api_key_env);
    headers.emplace("Authorization", std::string("Bearer ") + key);
  }

  auto res = client.Post(url.path, headers, body.dump(), "application/json");
  if (!res)
    throw ProviderError(cfg.provider_id + ": " + httplib::to_string(res.error()));
  if (res->status != 200)
    throw ProviderError(cfg.provider_id + ": HTTP " + std::to_string(res->status));

  try {
    nlohmann::json reply = nlohmann::json::parse(res->body);
    return reply.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw ProviderError(cfg.provider_id + ": malformed completion response: " + e.what());
  }
}

/// Remote chat-completion provider.
class HttpProvider : public Provider {
 public:
  explicit HttpProvider(ProviderConfig cfg) : cfg_(std::move(cfg)) {}

  std::string complete(const std::string& prompt, const DecisionContext&) override {
    return http_post_chat(cfg_, prompt);
  }
  bool uses_network() const override { return true; }

 private:
  ProviderConfig cfg_;
};

}  // namespace arena
