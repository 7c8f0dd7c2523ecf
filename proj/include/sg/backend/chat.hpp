#pragma once

#include <string>
#include <vector>

#include <json.hpp>

namespace sg::backend {

enum class Role { System, User, Assistant };

std::string to_string(Role role);
Role role_from_string(const std::string& name);

struct Message {
  Role role = Role::User;
  std::string content;

  bool operator==(const Message&) const = default;
};

struct ChatRequest {
  std::vector<Message> messages;
  double temperature = 1.0;
  int max_tokens = 1024;
  std::string model_id;

  bool operator==(const ChatRequest&) const = default;

  const std::string* last_user_content() const;
  std::string joined_text() const;
};

enum class FinishReason { Stop, Length, ProviderError };

std::string to_string(FinishReason reason);

struct Completion {
  std::string text;
  FinishReason finish_reason = FinishReason::Stop;

  bool ok() const { return finish_reason != FinishReason::ProviderError; }
};

nlohmann::json to_json(const ChatRequest& request);
ChatRequest chat_request_from_json(const nlohmann::json& doc);

/// Canonical byte serialization, used for request hashing and byte-equality
/// comparisons.
std::string canonical_bytes(const ChatRequest& request);

class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  /// Thread-safe. Returns a provider_error completion after the transport
  /// retry budget; throws AuthenticationError for credential problems.
  virtual Completion complete(const ChatRequest& request) = 0;
};

}  // namespace sg::backend
