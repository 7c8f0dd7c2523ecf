#include "sg/scenario/render.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>

#include "sg/common/errors.hpp"

namespace sg::scenario {

namespace {

bool is_name_start(char c) { return c >= 'A' && c <= 'Z'; }
bool is_name_char(char c) { return (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_'; }

// Returns the placeholder name starting at text[pos+1], or empty if the '$'
// does not start a placeholder token.
std::string name_at(const std::string& text, std::size_t pos) {
  std::size_t i = pos + 1;
  if (i >= text.size() || !is_name_start(text[i])) return {};
  std::size_t end = i + 1;
  while (end < text.size() && is_name_char(text[end])) ++end;
  return text.substr(i, end - i);
}

}  // namespace

std::set<std::string> placeholders_in(const std::string& template_text) {
  std::set<std::string> names;
  for (std::size_t pos = template_text.find('$'); pos != std::string::npos;
       pos = template_text.find('$', pos + 1)) {
    auto name = name_at(template_text, pos);
    if (!name.empty()) names.insert(name);
  }
  return names;
}

std::string format_money(double amount) {
  char buf[64];
  if (std::abs(amount - std::round(amount)) < 1e-9) {
    std::snprintf(buf, sizeof(buf), "%.0f", amount);
  } else {
    std::snprintf(buf, sizeof(buf), "%.2f", amount);
  }
  return buf;
}

std::string substitute(const std::string& template_text, const std::map<std::string, double>& params) {
  std::string out;
  out.reserve(template_text.size());
  std::size_t last = 0;
  for (std::size_t pos = template_text.find('$'); pos != std::string::npos;
       pos = template_text.find('$', pos + 1)) {
    auto name = name_at(template_text, pos);
    if (name.empty()) continue;
    auto it = params.find(name);
    if (it == params.end()) throw MissingParamError(name);
    out.append(template_text, last, pos - last);
    out += "$" + format_money(it->second);
    last = pos + 1 + name.size();
  }
  out.append(template_text, last, std::string::npos);
  return out;
}

std::map<std::string, double> default_params(const ThreatScenario& scenario) {
  std::map<std::string, double> params = known_placeholders();
  for (const auto& [name, value] : scenario.numeric_params) params[name] = value;
  return params;
}

std::string render(const ThreatScenario& scenario, ThreatKind kind,
                   const std::map<std::string, double>& params) {
  return substitute(scenario.context_template, params) + "\n\n" +
         substitute(scenario.template_for(kind), params);
}

}  // namespace sg::scenario
