#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sg/backend/sampling.hpp"
#include "sg/interventions/method.hpp"

namespace sg::config {

struct MethodConfig {
  interventions::MethodSpec spec;
  /// Overrides the run's model for this method (fine-tuned model ids).
  std::optional<std::string> model;
  std::optional<std::string> translator_model;
};

struct BenchmarkConfig {
  std::string name;
  std::filesystem::path path;
};

struct BackendChoice {
  enum class Type { Mock, Http };
  Type type = Type::Mock;
  /// Mock: optional behavior file. Http: base URL and key env var.
  std::optional<std::filesystem::path> mock_behavior;
  std::string base_url = "https://api.openai.com";
  std::string api_key_env = "SG_API_KEY";
};

struct RunConfig {
  std::filesystem::path dataset;
  std::filesystem::path prompts_dir;
  std::vector<std::string> models;
  std::vector<MethodConfig> methods;
  backend::SamplingPolicy policy;
  std::uint64_t seed = 0;
  double temperature = 1.0;
  int max_tokens = 1024;
  int max_in_flight = 4;
  double gray_threshold = 0.75;
  std::filesystem::path output_dir = "run_out";
  BackendChoice backend;
  /// Any of: primary, default_threat, pointless, nonthreat.
  std::vector<std::string> evaluations = {"primary", "default_threat", "pointless"};
  std::vector<BenchmarkConfig> benchmarks;
  std::optional<std::filesystem::path> personas_dir;
};

nlohmann::json to_json(const RunConfig& config);
RunConfig run_config_from_json(const nlohmann::json& doc);

/// Loads and checks that referenced files exist; errors name the field.
RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace sg::config
