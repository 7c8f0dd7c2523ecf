#pragma once

#include <chrono>
#include <string>
#include <vector>

#include "sg/backend/chat.hpp"

namespace sg::backend {

struct HttpBackendConfig {
  std::string base_url = "https://api.openai.com";
  std::string path = "/v1/chat/completions";
  std::string api_key_env = "SG_API_KEY";
  std::chrono::seconds timeout{120};
  /// Transport retry schedule; exhausted -> provider_error completion.
  std::vector<std::chrono::milliseconds> backoff = {
      std::chrono::milliseconds(1000),
      std::chrono::milliseconds(2000),
      std::chrono::milliseconds(4000),
  };
};

/// Chat-completion client speaking the common HTTP wire format: POST with a
/// JSON body {model, messages, temperature, max_tokens}. The base URL is
/// configurable so any compatible provider can be used.
class HttpBackend : public ChatBackend {
 public:
  explicit HttpBackend(HttpBackendConfig config);

  Completion complete(const ChatRequest& request) override;

 private:
  HttpBackendConfig config_;
};

}  // namespace sg::backend
