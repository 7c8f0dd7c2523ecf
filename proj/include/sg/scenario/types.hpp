#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

namespace sg::scenario {

enum class ThreatKind { Default, Surrogate, Pointless };

std::string to_string(ThreatKind kind);
ThreatKind threat_kind_from_string(const std::string& name);

enum class Tone { Default, Aggressive, Calm, Subtle, Obvious };

std::string to_string(Tone tone);
Tone tone_from_string(const std::string& name);

/// The five scenario classification tags.
const std::set<std::string>& known_tags();

/// Placeholders every scenario may reference without declaring, with their
/// default money amounts (currency units).
const std::map<std::string, double>& known_placeholders();

struct ThreatScenario {
  std::string id;
  std::string context_template;
  std::string default_threat_template;
  std::string surrogate_threat_template;
  std::string pointless_threat_template;
  std::set<std::string> tags;
  Tone tone = Tone::Default;
  bool sg_argument = false;
  std::map<std::string, double> numeric_params;

  const std::string& template_for(ThreatKind kind) const;
  bool has_tag(const std::string& tag) const { return tags.count(tag) > 0; }
};

enum class Intent { Intentional, Accidental };

std::string to_string(Intent intent);
Intent intent_from_string(const std::string& name);

struct NonThreatScenario {
  std::string id;
  std::string text;
  Intent intent = Intent::Intentional;
  std::set<std::string> themes;
  std::string burn_preventing_action;
};

struct Dataset {
  std::string schema_version = "1.0";
  std::vector<ThreatScenario> scenarios;
  std::vector<NonThreatScenario> non_threat;

  const ThreatScenario* find(const std::string& id) const;
};

}  // namespace sg::scenario
