#include "sg/config/run_config.hpp"

#include "sg/common/errors.hpp"
#include "sg/common/jsonio.hpp"

namespace sg::config {

namespace {

using nlohmann::json;

json method_to_json(const MethodConfig& method) {
  json out = {{"kind", to_string(method.spec.kind)}, {"cot", method.spec.cot}};
  if (method.spec.ft_variant) out["variant"] = to_string(*method.spec.ft_variant);
  if (method.spec.translator) {
    out["translator"] =
        *method.spec.translator == interventions::TranslatorKind::FineTuned ? "fine_tuned" : "few_shot";
  }
  if (method.model) out["model"] = *method.model;
  if (method.translator_model) out["translator_model"] = *method.translator_model;
  return out;
}

MethodConfig method_from_json(const json& doc) {
  MethodConfig method;
  method.spec.kind = interventions::method_kind_from_string(doc.at("kind").get<std::string>());
  method.spec.cot = doc.value("cot", true);
  if (doc.contains("variant")) {
    method.spec.ft_variant = interventions::ft_variant_from_string(doc.at("variant").get<std::string>());
  }
  if (doc.contains("translator")) {
    const std::string t = doc.at("translator").get<std::string>();
    if (t == "few_shot") {
      method.spec.translator = interventions::TranslatorKind::FewShot;
    } else if (t == "fine_tuned") {
      method.spec.translator = interventions::TranslatorKind::FineTuned;
    } else {
      throw ConfigError("methods.translator", "must be few_shot or fine_tuned");
    }
  }
  if (doc.contains("model")) method.model = doc.at("model").get<std::string>();
  if (doc.contains("translator_model")) {
    method.translator_model = doc.at("translator_model").get<std::string>();
  }
  try {
    method.spec.check();
  } catch (const Error& ex) {
    throw ConfigError("methods", ex.what());
  }
  return method;
}

}  // namespace

json to_json(const RunConfig& config) {
  json methods = json::array();
  for (const auto& m : config.methods) methods.push_back(method_to_json(m));
  json benchmarks = json::array();
  for (const auto& b : config.benchmarks) {
    benchmarks.push_back({{"name", b.name}, {"path", b.path.string()}});
  }
  json backend = {{"type", config.backend.type == BackendChoice::Type::Mock ? "mock" : "http"}};
  if (config.backend.mock_behavior) backend["behavior"] = config.backend.mock_behavior->string();
  backend["base_url"] = config.backend.base_url;
  backend["api_key_env"] = config.backend.api_key_env;

  json out = {
      {"dataset", config.dataset.string()},
      {"prompts", config.prompts_dir.string()},
      {"models", config.models},
      {"methods", std::move(methods)},
      {"policy",
       {{"n_samples", config.policy.n_samples},
        {"refusal_retries_per_sample", config.policy.refusal_retries_per_sample},
        {"invalid_retries", config.policy.invalid_retries}}},
      {"seed", config.seed},
      {"temperature", config.temperature},
      {"max_tokens", config.max_tokens},
      {"max_in_flight", config.max_in_flight},
      {"gray_threshold", config.gray_threshold},
      {"output_dir", config.output_dir.string()},
      {"backend", std::move(backend)},
      {"evaluations", config.evaluations},
      {"benchmarks", std::move(benchmarks)},
  };
  if (config.personas_dir) out["personas"] = config.personas_dir->string();
  return out;
}

RunConfig run_config_from_json(const json& doc) {
  RunConfig config;
  try {
    config.dataset = doc.at("dataset").get<std::string>();
  } catch (const json::exception&) {
    throw ConfigError("dataset", "missing dataset path");
  }
  try {
    config.prompts_dir = doc.at("prompts").get<std::string>();
  } catch (const json::exception&) {
    throw ConfigError("prompts", "missing prompt library path");
  }
  config.models = doc.value("models", std::vector<std::string>{"mock-default"});
  if (config.models.empty()) throw ConfigError("models", "at least one model required");
  if (!doc.contains("methods") || doc.at("methods").empty()) {
    throw ConfigError("methods", "at least one method required");
  }
  for (const auto& m : doc.at("methods")) config.methods.push_back(method_from_json(m));
  if (doc.contains("policy")) {
    const auto& p = doc.at("policy");
    config.policy.n_samples = p.value("n_samples", 20);
    config.policy.refusal_retries_per_sample = p.value("refusal_retries_per_sample", 20);
    config.policy.invalid_retries = p.value("invalid_retries", 10);
  }
  config.seed = doc.value("seed", std::uint64_t{0});
  config.temperature = doc.value("temperature", 1.0);
  config.max_tokens = doc.value("max_tokens", 1024);
  config.max_in_flight = doc.value("max_in_flight", 4);
  if (config.max_in_flight < 1) throw ConfigError("max_in_flight", "must be >= 1");
  config.gray_threshold = doc.value("gray_threshold", 0.75);
  config.output_dir = doc.value("output_dir", std::string{"run_out"});
  if (doc.contains("backend")) {
    const auto& b = doc.at("backend");
    const std::string type = b.value("type", "mock");
    if (type == "mock") {
      config.backend.type = BackendChoice::Type::Mock;
      if (b.contains("behavior")) config.backend.mock_behavior = b.at("behavior").get<std::string>();
    } else if (type == "http") {
      config.backend.type = BackendChoice::Type::Http;
      config.backend.base_url = b.value("base_url", config.backend.base_url);
      config.backend.api_key_env = b.value("api_key_env", config.backend.api_key_env);
    } else {
      throw ConfigError("backend.type", "must be mock or http");
    }
  }
  config.evaluations = doc.value("evaluations", config.evaluations);
  for (const auto& name : config.evaluations) {
    if (name != "primary" && name != "default_threat" && name != "pointless" && name != "nonthreat") {
      throw ConfigError("evaluations", "unknown evaluation '" + name + "'");
    }
  }
  if (doc.contains("benchmarks")) {
    for (const auto& b : doc.at("benchmarks")) {
      config.benchmarks.push_back(
          {b.at("name").get<std::string>(), b.at("path").get<std::string>()});
    }
  }
  if (doc.contains("personas")) config.personas_dir = doc.at("personas").get<std::string>();
  try {
    config.policy.check();
  } catch (const Error& ex) {
    throw ConfigError("policy", ex.what());
  }
  return config;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  RunConfig config = run_config_from_json(read_json_file(path));
  if (!std::filesystem::exists(config.dataset)) {
    throw ConfigError("dataset", "file does not exist: " + config.dataset.string());
  }
  if (!std::filesystem::exists(config.prompts_dir)) {
    throw ConfigError("prompts", "directory does not exist: " + config.prompts_dir.string());
  }
  if (config.backend.mock_behavior && !std::filesystem::exists(*config.backend.mock_behavior)) {
    throw ConfigError("backend.behavior", "file does not exist: " + config.backend.mock_behavior->string());
  }
  for (const auto& b : config.benchmarks) {
    if (!std::filesystem::exists(b.path)) {
      throw ConfigError("benchmarks.path", "file does not exist: " + b.path.string());
    }
  }
  if (config.personas_dir && !std::filesystem::exists(*config.personas_dir)) {
    throw ConfigError("personas", "directory does not exist: " + config.personas_dir->string());
  }
  return config;
}

}  // namespace sg::config
