#include "sg/backend/chat.hpp"

#include "sg/common/errors.hpp"

namespace sg::backend {

std::string to_string(Role role) {
  switch (role) {
    case Role::System: return "system";
    case Role::User: return "user";
    case Role::Assistant: return "assistant";
  }
  throw Error("unknown Role");
}

Role role_from_string(const std::string& name) {
  if (name == "system") return Role::System;
  if (name == "user") return Role::User;
  if (name == "assistant") return Role::Assistant;
  throw Error("unknown role: " + name);
}

const std::string* ChatRequest::last_user_content() const {
  for (auto it = messages.rbegin(); it != messages.rend(); ++it) {
    if (it->role == Role::User) return &it->content;
  }
  return nullptr;
}

std::string ChatRequest::joined_text() const {
  std::string out;
  for (const auto& m : messages) {
    out += m.content;
    out += '\n';
  }
  return out;
}

std::string to_string(FinishReason reason) {
  switch (reason) {
    case FinishReason::Stop: return "stop";
    case FinishReason::Length: return "length";
    case FinishReason::ProviderError: return "provider_error";
  }
  throw Error("unknown FinishReason");
}

nlohmann::json to_json(const ChatRequest& request) {
  nlohmann::json messages = nlohmann::json::array();
  for (const auto& m : request.messages) {
    messages.push_back({{"role", to_string(m.role)}, {"content", m.content}});
  }
  return nlohmann::json{{"model", request.model_id},
                        {"messages", std::move(messages)},
                        {"temperature", request.temperature},
                        {"max_tokens", request.max_tokens}};
}

ChatRequest chat_request_from_json(const nlohmann::json& doc) {
  ChatRequest request;
  request.model_id = doc.at("model").get<std::string>();
  request.temperature = doc.value("temperature", 1.0);
  request.max_tokens = doc.value("max_tokens", 1024);
  for (const auto& m : doc.at("messages")) {
    request.messages.push_back(
        {role_from_string(m.at("role").get<std::string>()), m.at("content").get<std::string>()});
  }
  return request;
}

std::string canonical_bytes(const ChatRequest& request) { return to_json(request).dump(); }

}  // namespace sg::backend
