#pragma once

#include <map>
#include <set>
#include <string>

#include "sg/scenario/types.hpp"

namespace sg::scenario {

/// Placeholder tokens are $NAME with NAME matching [A-Z][A-Z0-9_]*.
/// Substituted values render as "$<amount>".
std::set<std::string> placeholders_in(const std::string& template_text);

/// Formats a money amount: integral values without decimals, otherwise two.
std::string format_money(double amount);

/// Substitutes every placeholder in the template. Throws MissingParamError
/// naming the first placeholder absent from params.
std::string substitute(const std::string& template_text, const std::map<std::string, double>& params);

/// Registry defaults overlaid with the scenario's own numeric_params.
std::map<std::string, double> default_params(const ThreatScenario& scenario);

/// Context followed by the selected threat text, fully substituted.
std::string render(const ThreatScenario& scenario, ThreatKind kind,
                   const std::map<std::string, double>& params);

}  // namespace sg::scenario
