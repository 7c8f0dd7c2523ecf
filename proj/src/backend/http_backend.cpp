#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "sg/backend/http_backend.hpp"

#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "sg/common/errors.hpp"

namespace sg::backend {

namespace {

FinishReason finish_reason_from_api(const std::string& value) {
  if (value == "length") return FinishReason::Length;
  return FinishReason::Stop;
}

bool retryable_status(int status) { return status == 408 || status == 429 || status >= 500; }

}  // namespace

HttpBackend::HttpBackend(HttpBackendConfig config) : config_(std::move(config)) {}

Completion HttpBackend::complete(const ChatRequest& request) {
  const char* key = std::getenv(config_.api_key_env.c_str());
  if (key == nullptr || *key == '\0') {
    throw AuthenticationError("no API key in environment variable " + config_.api_key_env);
  }

  const std::string body = to_json(request).dump();
  httplib::Headers headers = {{"Authorization", std::string("Bearer ") + key}};

  const std::size_t attempts = config_.backoff.size() + 1;
  for (std::size_t attempt = 0; attempt < attempts; ++attempt) {
    httplib::Client client(config_.base_url);
    client.set_read_timeout(config_.timeout);
    client.set_connection_timeout(config_.timeout);

    auto result = client.Post(config_.path, headers, body, "application/json");
    if (result) {
      if (result->status == 401 || result->status == 403) {
        throw AuthenticationError("provider rejected credentials (HTTP " +
                                  std::to_string(result->status) + ")");
      }
      if (result->status >= 200 && result->status < 300) {
        try {
          auto payload = nlohmann::json::parse(result->body);
          const auto& choice = payload.at("choices").at(0);
          Completion completion;
          completion.text = choice.at("message").at("content").get<std::string>();
          completion.finish_reason = finish_reason_from_api(choice.value("finish_reason", "stop"));
          return completion;
        } catch (const nlohmann::json::exception&) {
          // Fall through to retry; malformed payloads are treated as
          // transient provider trouble.
        }
      } else if (!retryable_status(result->status)) {
        return {"", FinishReason::ProviderError};
      }
    }
    if (attempt < config_.backoff.size()) std::this_thread::sleep_for(config_.backoff[attempt]);
  }
  return {"", FinishReason::ProviderError};
}

}  // namespace sg::backend
