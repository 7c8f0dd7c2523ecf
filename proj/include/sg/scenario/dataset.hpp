#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "sg/common/errors.hpp"
#include "sg/scenario/types.hpp"

namespace sg::scenario {

/// Validates all type invariants; empty result means the dataset is well-formed.
std::vector<Violation> validate(const Dataset& dataset);

nlohmann::json to_json(const ThreatScenario& scenario);
ThreatScenario threat_scenario_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const NonThreatScenario& scenario);
NonThreatScenario non_threat_from_json(const nlohmann::json& doc);

nlohmann::json to_json(const Dataset& dataset);
Dataset dataset_from_json(const nlohmann::json& doc);

/// Loads and validates. Throws SchemaError carrying the violation list.
Dataset load_dataset(const std::filesystem::path& path);
void save_dataset(const Dataset& dataset, const std::filesystem::path& path);

struct Split {
  Dataset train;
  Dataset test;
};

/// Seeded uniform split of the threat scenarios into n_train/rest. Each part
/// preserves the dataset's scenario order; non_threat lists are not split.
Split split(const Dataset& dataset, std::uint64_t seed, std::size_t n_train);

/// Partition by tag membership: (with_tag, without_tag). Throws on unknown tag.
Split split_by_tag(const Dataset& dataset, const std::string& tag);

}  // namespace sg::scenario
