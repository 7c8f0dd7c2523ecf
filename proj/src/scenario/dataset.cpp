#include "sg/scenario/dataset.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include "sg/common/jsonio.hpp"
#include "sg/common/rng.hpp"
#include "sg/scenario/render.hpp"

namespace sg::scenario {

namespace {

using nlohmann::json;

void check_placeholders(const ThreatScenario& s, const std::string& field, const std::string& text,
                        std::vector<Violation>& out) {
  const auto& registry = known_placeholders();
  for (const auto& name : placeholders_in(text)) {
    if (s.numeric_params.count(name) == 0 && registry.count(name) == 0) {
      out.push_back({s.id, field, "references undeclared placeholder $" + name});
    }
  }
}

std::set<std::string> cost_placeholders(const std::string& text) {
  std::set<std::string> names;
  for (const auto& name : placeholders_in(text)) {
    if (name.rfind("COST_TO_THREATENER", 0) == 0) names.insert(name);
  }
  return names;
}

}  // namespace

std::vector<Violation> validate(const Dataset& dataset) {
  std::vector<Violation> out;
  std::set<std::string> seen;
  for (const auto& s : dataset.scenarios) {
    if (s.id.empty()) out.push_back({s.id, "id", "empty id"});
    if (!seen.insert(s.id).second) out.push_back({s.id, "id", "duplicate id \"" + s.id + "\""});
    check_placeholders(s, "context_template", s.context_template, out);
    check_placeholders(s, "default_threat_template", s.default_threat_template, out);
    check_placeholders(s, "surrogate_threat_template", s.surrogate_threat_template, out);
    check_placeholders(s, "pointless_threat_template", s.pointless_threat_template, out);
    for (const auto& tag : s.tags) {
      if (known_tags().count(tag) == 0) out.push_back({s.id, "tags", "unknown tag \"" + tag + "\""});
    }
    // Equal cost to the threatener: default and surrogate must price the
    // threat with the same cost placeholder.
    if (cost_placeholders(s.default_threat_template) != cost_placeholders(s.surrogate_threat_template)) {
      out.push_back({s.id, "surrogate_threat_template",
                     "default and surrogate threats reference different cost placeholders"});
    }
  }
  std::set<std::string> nt_seen;
  for (const auto& s : dataset.non_threat) {
    if (s.id.empty()) out.push_back({s.id, "id", "empty id"});
    if (!nt_seen.insert(s.id).second) out.push_back({s.id, "id", "duplicate id \"" + s.id + "\""});
    if (s.themes.empty()) out.push_back({s.id, "themes", "non-threat scenario has no themes"});
    if (s.burn_preventing_action.empty()) {
      out.push_back({s.id, "burn_preventing_action", "missing burn-preventing action label"});
    }
  }
  return out;
}

json to_json(const ThreatScenario& s) {
  return json{
      {"id", s.id},
      {"context_template", s.context_template},
      {"default_threat_template", s.default_threat_template},
      {"surrogate_threat_template", s.surrogate_threat_template},
      {"pointless_threat_template", s.pointless_threat_template},
      {"tags", s.tags},
      {"tone", to_string(s.tone)},
      {"sg_argument", s.sg_argument},
      {"numeric_params", s.numeric_params},
  };
}

ThreatScenario threat_scenario_from_json(const json& entry) {
  ThreatScenario s;
  s.id = entry.at("id").get<std::string>();
  s.context_template = entry.at("context_template").get<std::string>();
  s.default_threat_template = entry.at("default_threat_template").get<std::string>();
  s.surrogate_threat_template = entry.at("surrogate_threat_template").get<std::string>();
  s.pointless_threat_template = entry.at("pointless_threat_template").get<std::string>();
  s.tags = entry.value("tags", std::set<std::string>{});
  s.tone = tone_from_string(entry.value("tone", "default"));
  s.sg_argument = entry.value("sg_argument", false);
  if (entry.contains("numeric_params")) {
    for (const auto& [name, value] : entry.at("numeric_params").items()) {
      s.numeric_params[name] = value.get<double>();
    }
  }
  return s;
}

json to_json(const NonThreatScenario& s) {
  return json{
      {"id", s.id},
      {"text", s.text},
      {"intent", to_string(s.intent)},
      {"themes", s.themes},
      {"burn_preventing_action", s.burn_preventing_action},
  };
}

NonThreatScenario non_threat_from_json(const json& entry) {
  NonThreatScenario s;
  s.id = entry.at("id").get<std::string>();
  s.text = entry.at("text").get<std::string>();
  s.intent = intent_from_string(entry.at("intent").get<std::string>());
  s.themes = entry.value("themes", std::set<std::string>{});
  s.burn_preventing_action = entry.value("burn_preventing_action", std::string{});
  return s;
}

json to_json(const Dataset& dataset) {
  json scenarios = json::array();
  for (const auto& s : dataset.scenarios) scenarios.push_back(to_json(s));
  json non_threat = json::array();
  for (const auto& s : dataset.non_threat) non_threat.push_back(to_json(s));
  return json{{"schema_version", dataset.schema_version},
              {"scenarios", std::move(scenarios)},
              {"non_threat", std::move(non_threat)}};
}

Dataset dataset_from_json(const json& doc) {
  Dataset dataset;
  try {
    dataset.schema_version = doc.at("schema_version").get<std::string>();
    for (const auto& entry : doc.at("scenarios")) {
      dataset.scenarios.push_back(threat_scenario_from_json(entry));
    }
    if (doc.contains("non_threat")) {
      for (const auto& entry : doc.at("non_threat")) {
        dataset.non_threat.push_back(non_threat_from_json(entry));
      }
    }
  } catch (const json::exception& ex) {
    throw SchemaError(std::string("malformed dataset document: ") + ex.what());
  }
  return dataset;
}

Dataset load_dataset(const std::filesystem::path& path) {
  Dataset dataset = dataset_from_json(read_json_file(path));
  auto violations = validate(dataset);
  if (!violations.empty()) {
    std::string summary = "dataset validation failed (" + std::to_string(violations.size()) +
                          " violation(s)); first: " + violations.front().str();
    throw SchemaError(summary, std::move(violations));
  }
  return dataset;
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& path) {
  write_json_file(path, to_json(dataset));
}

Split split(const Dataset& dataset, std::uint64_t seed, std::size_t n_train) {
  if (n_train > dataset.scenarios.size()) {
    throw Error("split: n_train " + std::to_string(n_train) + " exceeds dataset size " +
                std::to_string(dataset.scenarios.size()));
  }
  std::vector<std::size_t> order(dataset.scenarios.size());
  std::iota(order.begin(), order.end(), 0);
  auto rng = seeded_rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<bool> in_train(dataset.scenarios.size(), false);
  for (std::size_t i = 0; i < n_train; ++i) in_train[order[i]] = true;

  Split result;
  result.train.schema_version = dataset.schema_version;
  result.test.schema_version = dataset.schema_version;
  for (std::size_t i = 0; i < dataset.scenarios.size(); ++i) {
    (in_train[i] ? result.train : result.test).scenarios.push_back(dataset.scenarios[i]);
  }
  return result;
}

Split split_by_tag(const Dataset& dataset, const std::string& tag) {
  if (known_tags().count(tag) == 0) throw Error("unknown tag: " + tag);
  Split result;
  result.train.schema_version = dataset.schema_version;
  result.test.schema_version = dataset.schema_version;
  for (const auto& s : dataset.scenarios) {
    (s.has_tag(tag) ? result.train : result.test).scenarios.push_back(s);
  }
  return result;
}

}  // namespace sg::scenario
