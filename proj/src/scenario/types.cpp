#include "sg/scenario/types.hpp"

#include "sg/common/errors.hpp"

namespace sg::scenario {

std::string to_string(ThreatKind kind) {
  switch (kind) {
    case ThreatKind::Default: return "default";
    case ThreatKind::Surrogate: return "surrogate";
    case ThreatKind::Pointless: return "pointless";
  }
  throw Error("unknown ThreatKind");
}

ThreatKind threat_kind_from_string(const std::string& name) {
  if (name == "default") return ThreatKind::Default;
  if (name == "surrogate") return ThreatKind::Surrogate;
  if (name == "pointless") return ThreatKind::Pointless;
  throw Error("unknown threat kind: " + name);
}

std::string to_string(Tone tone) {
  switch (tone) {
    case Tone::Default: return "default";
    case Tone::Aggressive: return "aggressive";
    case Tone::Calm: return "calm";
    case Tone::Subtle: return "subtle";
    case Tone::Obvious: return "obvious";
  }
  throw Error("unknown Tone");
}

Tone tone_from_string(const std::string& name) {
  if (name == "default") return Tone::Default;
  if (name == "aggressive") return Tone::Aggressive;
  if (name == "calm") return Tone::Calm;
  if (name == "subtle") return Tone::Subtle;
  if (name == "obvious") return Tone::Obvious;
  throw Error("unknown tone: " + name);
}

const std::set<std::string>& known_tags() {
  static const std::set<std::string> tags = {
      "concession_is_immoral", "threat_execution_is_immoral", "threat_cost_unknown",
      "credible", "repeated",
  };
  return tags;
}

const std::map<std::string, double>& known_placeholders() {
  static const std::map<std::string, double> registry = {
      {"HARM_TO_TARGET_FROM_GIVING_IN", 500.0},
      {"COST_TO_THREATENER_FROM_EXECUTING_THREAT", 500.0},
      {"COST_TO_THREATENER_FROM_EXECUTING_THREAT_PARAM_1", 500.0},
  };
  return registry;
}

const std::string& ThreatScenario::template_for(ThreatKind kind) const {
  switch (kind) {
    case ThreatKind::Default: return default_threat_template;
    case ThreatKind::Surrogate: return surrogate_threat_template;
    case ThreatKind::Pointless: return pointless_threat_template;
  }
  throw Error("unknown ThreatKind");
}

std::string to_string(Intent intent) {
  return intent == Intent::Intentional ? "intentional" : "accidental";
}

Intent intent_from_string(const std::string& name) {
  if (name == "intentional") return Intent::Intentional;
  if (name == "accidental") return Intent::Accidental;
  throw Error("unknown intent: " + name);
}

const ThreatScenario* Dataset::find(const std::string& id) const {
  for (const auto& s : scenarios) {
    if (s.id == id) return &s;
  }
  return nullptr;
}

}  // namespace sg::scenario
