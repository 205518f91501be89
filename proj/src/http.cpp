#include "mctsgen/http.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <thread>

#include <spdlog/spdlog.h>

#include "httplib.h"
#include "mctsgen/errors.hpp"

namespace mctsgen {

using nlohmann::json;

void HttpBackendConfig::validate() const {
  if (!(base_url.starts_with("http://") || base_url.starts_with("https://"))) {
    throw ConfigurationError("base_url must be an absolute http(s) URL: " + base_url);
  }
  if (max_retries < 0) throw ConfigurationError("max_retries must be >= 0");
  if (!(timeout_seconds > 0.0)) throw ConfigurationError("timeout must be positive");
}

void HttpBackendConfig::apply_env() {
  if (const char* url = std::getenv("MCTSGEN_BASE_URL"); url && *url) base_url = url;
  if (const char* key = std::getenv("MCTSGEN_API_KEY"); key && *key) api_key = key;
}

json HttpBackendConfig::redacted() const {
  return {{"base_url", base_url},
          {"model_name", model_name},
          {"timeout_seconds", timeout_seconds},
          {"max_retries", max_retries},
          {"api_key", api_key.empty() ? "" : "***"}};
}

ParsedUrl parse_base_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ConfigurationError("not an absolute URL: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  ParsedUrl p;
  p.origin = url.substr(0, path_start);
  p.path = path_start == std::string::npos ? "" : url.substr(path_start);
  while (!p.path.empty() && p.path.back() == '/') p.path.pop_back();
  return p;
}

namespace {

std::string one_request(httplib::Client& client, const std::string& endpoint,
                        const std::string& body, const HttpBackendConfig& config) {
  httplib::Headers headers;
  if (!config.api_key.empty()) headers.emplace("Authorization", "Bearer " + config.api_key);
  auto res = client.Post(endpoint, headers, body, "application/json");
  if (!res) {
    const auto err = res.error();
    const std::string kind = err == httplib::Error::Read || err == httplib::Error::Write
                                 ? "timeout or connection reset"
                                 : httplib::to_string(err);
    throw TransportError("chat request failed: " + kind);
  }
  const int status = res->status;
  if (status == 429) throw RateLimitError("rate limited (HTTP 429)");
  if (status >= 500) throw TransportError("server error (HTTP " + std::to_string(status) + ")");
  if (status >= 400) {
    throw ConfigurationError("request rejected (HTTP " + std::to_string(status) + ")", status);
  }
  if (status < 200 || status >= 300) {
    throw ProtocolError("unexpected HTTP status " + std::to_string(status), res->body);
  }
  try {
    const auto j = json::parse(res->body);
    const auto& content = j.at("choices").at(0).at("message").at("content");
    if (!content.is_string()) throw ProtocolError("content is not a string", res->body);
    return content.get<std::string>();
  } catch (const json::exception&) {
    throw ProtocolError("response lacks choices[0].message.content", res->body);
  }
}

}  // namespace

std::vector<std::string> http_chat(const std::vector<ChatMessage>& messages,
                                   const ChatParams& params, const HttpBackendConfig& config) {
  config.validate();
  if (params.samples < 1) throw ValidationError("samples must be >= 1");
  const auto url = parse_base_url(config.base_url);
  const auto endpoint = url.path + "/chat/completions";

  httplib::Client client(url.origin);
  const auto timeout = std::chrono::duration_cast<std::chrono::microseconds>(
      std::chrono::duration<double>(config.timeout_seconds));
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);

  json msgs = json::array();
  for (const auto& m : messages) msgs.push_back({{"role", m.role}, {"content", m.content}});
  json body{{"model", config.model_name},
            {"messages", std::move(msgs)},
            {"temperature", params.temperature},
            {"max_tokens", params.max_tokens},
            {"n", 1}};
  const auto payload = body.dump();

  std::vector<std::string> replies;
  replies.reserve(params.samples);
  for (int s = 0; s < params.samples; ++s) {
    double delay = config.backoff_initial_seconds;
    for (int attempt = 0;; ++attempt) {
      try {
        replies.push_back(one_request(client, endpoint, payload, config));
        break;
      } catch (const BackendError& e) {
        if (!e.retryable() || attempt >= config.max_retries) throw;
        spdlog::warn("chat request failed ({}); retry {}/{} in {:.3f}s", e.what(), attempt + 1,
                     config.max_retries, delay);
        std::this_thread::sleep_for(std::chrono::duration<double>(delay));
        delay = std::min(delay * 2.0, config.backoff_max_seconds);
      }
    }
  }
  return replies;
}

ChatFn make_http_chat(HttpBackendConfig config) {
  config.validate();
  return [config](const std::vector<ChatMessage>& messages, const ChatParams& params) {
    return http_chat(messages, params, config);
  };
}

}  // namespace mctsgen
