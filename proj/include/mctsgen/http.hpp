#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "mctsgen/models.hpp"

namespace mctsgen {

/// Connection settings for an OpenAI-compatible chat-completions service.
struct HttpBackendConfig {
  std::string base_url = "http://localhost:8000/v1";  // absolute; ".../chat/completions" is appended
  std::string api_key;                                 // never logged or serialized
  std::string model_name;
  double timeout_seconds = 60.0;
  int max_retries = 3;
  double backoff_initial_seconds = 0.5;  // doubled per retry
  double backoff_max_seconds = 8.0;

  /// Throws ConfigurationError for a relative URL or a negative retry count.
  void validate() const;

  /// Overrides base_url/api_key from MCTSGEN_BASE_URL / MCTSGEN_API_KEY when set.
  void apply_env();

  /// Settings without the key, for logs and reports.
  nlohmann::json redacted() const;
};

/// Scheme+authority and path prefix of an absolute URL.
struct ParsedUrl {
  std::string origin;  // "http://host:port"
  std::string path;    // "/v1" (no trailing slash), may be empty
};
ParsedUrl parse_base_url(const std::string& url);

/// Sends one chat-completions request per sample with the given temperature
/// and returns each reply's first choice content.
///
/// 5xx, timeouts and connection failures raise TransportError and 429 raises
/// RateLimitError; both are retried with exponential backoff up to
/// max_retries times. Other 4xx raise ConfigurationError immediately. A 2xx
/// body without choices[0].message.content raises ProtocolError carrying the
/// raw body.
std::vector<std::string> http_chat(const std::vector<ChatMessage>& messages,
                                   const ChatParams& params, const HttpBackendConfig& config);

/// ChatFn bound to a config (copied).
ChatFn make_http_chat(HttpBackendConfig config);

}  // namespace mctsgen
