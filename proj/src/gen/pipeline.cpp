#include "sg/gen/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "sg/common/errors.hpp"
#include "sg/common/jsonio.hpp"
#include "sg/common/rng.hpp"
#include "sg/interventions/method.hpp"
#include "sg/scenario/dataset.hpp"

namespace sg::gen {

namespace {

using backend::ChatRequest;
using backend::Role;
using nlohmann::json;

constexpr const char* kGenerateDirective = "Write one new scenario following the format of the examples.";

std::string trimmed(const std::string& text) {
  auto begin = text.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return {};
  auto end = text.find_last_not_of(" \t\r\n");
  return text.substr(begin, end - begin + 1);
}

/// Extracts the body of the first ```<fence> ... ``` block.
std::optional<std::string> fenced_block(const std::string& text, const std::string& fence) {
  const std::string open = "```" + fence;
  auto start = text.find(open);
  if (start == std::string::npos) return std::nullopt;
  start += open.size();
  auto end = text.find("```", start);
  if (end == std::string::npos) return std::nullopt;
  return text.substr(start, end - start);
}

std::map<std::string, std::string> parse_fields(const std::string& block) {
  std::map<std::string, std::string> fields;
  std::istringstream in(block);
  std::string line;
  while (std::getline(in, line)) {
    auto colon = line.find(':');
    if (colon == std::string::npos) continue;
    const std::string key = trimmed(line.substr(0, colon));
    if (key.empty() || key.find(' ') != std::string::npos) continue;
    fields[key] = trimmed(line.substr(colon + 1));
  }
  return fields;
}

ChatRequest make_request(const GenContext& ctx, std::string system_text, std::string user_text) {
  ChatRequest request;
  request.model_id = ctx.defaults.model_id;
  request.temperature = ctx.defaults.temperature;
  request.max_tokens = ctx.defaults.max_tokens;
  request.messages.push_back({Role::System, std::move(system_text)});
  request.messages.push_back({Role::User, std::move(user_text)});
  return request;
}

std::string shot_block_threat(const scenario::Dataset& seed_set, int shot_count) {
  std::string shots;
  int used = 0;
  for (const auto& s : seed_set.scenarios) {
    if (used >= shot_count) break;
    shots += "```scenario\n";
    shots += "ID: " + s.id + "\n";
    shots += "CONTEXT: " + s.context_template + "\n";
    shots += "DEFAULT_THREAT: " + s.default_threat_template + "\n";
    shots += "SURROGATE_THREAT: " + s.surrogate_threat_template + "\n";
    shots += "POINTLESS_THREAT: " + s.pointless_threat_template + "\n";
    std::string tags;
    for (const auto& tag : s.tags) {
      if (!tags.empty()) tags += ", ";
      tags += tag;
    }
    shots += "TAGS: " + tags + "\n";
    shots += "```\n\n";
    ++used;
  }
  return shots;
}

std::string shot_block_nonthreat(const scenario::Dataset& seed_set, int shot_count) {
  // Threat scenarios serve as shots so generated texts share their texture.
  std::string shots;
  int used = 0;
  for (const auto& s : seed_set.scenarios) {
    if (used >= shot_count) break;
    shots += "Example situation:\n" + s.context_template + "\n\n";
    ++used;
  }
  return shots;
}

std::string spec_description(const GenerationSpec& spec) {
  std::string out = "Tone: " + to_string(spec.tone) + "\n";
  std::string tags;
  for (const auto& tag : spec.target_tags) {
    if (!tags.empty()) tags += ", ";
    tags += tag;
  }
  out += "Tags the scenario should carry: " + (tags.empty() ? "(none)" : tags) + "\n";
  if (!spec.numeric_placeholders.empty()) {
    std::string names;
    for (const auto& n : spec.numeric_placeholders) {
      if (!names.empty()) names += ", ";
      names += "$" + n;
    }
    out += "Numeric placeholders to use: " + names + "\n";
  }
  return out;
}

std::string intent_suffix(scenario::Intent intent) {
  if (intent == scenario::Intent::Intentional) {
    return "The potential money burning must be deliberate: a person or organization plans to "
           "burn the money on purpose.";
  }
  return "The potential money burning must not be deliberate: it may only come about as an "
         "accident.";
}

interventions::YesNo checked_yes_no(const GenContext& ctx, const ChatRequest& request,
                                    const std::string& marker) {
  for (int attempt = 0; attempt < ctx.checker_retries; ++attempt) {
    backend::Completion completion = ctx.backend->complete(request);
    if (!completion.ok()) return interventions::YesNo::Invalid;
    auto result = interventions::parse_yes_no(completion.text, marker);
    if (result == interventions::YesNo::Yes || result == interventions::YesNo::No) return result;
  }
  return interventions::YesNo::Invalid;
}

}  // namespace

std::string to_string(ReviewStatus status) {
  switch (status) {
    case ReviewStatus::Pending: return "pending";
    case ReviewStatus::Accepted: return "accepted";
    case ReviewStatus::Rejected: return "rejected";
    case ReviewStatus::Corrected: return "corrected";
  }
  throw Error("unknown ReviewStatus");
}

ReviewStatus review_status_from_string(const std::string& name) {
  if (name == "pending") return ReviewStatus::Pending;
  if (name == "accepted") return ReviewStatus::Accepted;
  if (name == "rejected") return ReviewStatus::Rejected;
  if (name == "corrected") return ReviewStatus::Corrected;
  throw Error("unknown review status: " + name);
}

ThemeRegistry ThemeRegistry::load(const std::filesystem::path& path) {
  const json doc = read_json_file(path);
  std::vector<std::string> labels;
  for (const auto& entry : doc.at("themes")) labels.push_back(entry.at("label").get<std::string>());
  return from_labels(std::move(labels));
}

ThemeRegistry ThemeRegistry::from_labels(std::vector<std::string> labels) {
  if (labels.size() != 20) {
    throw Error("theme registry must contain exactly 20 themes, got " +
                std::to_string(labels.size()));
  }
  ThemeRegistry registry;
  registry.labels_ = std::move(labels);
  return registry;
}

bool ThemeRegistry::contains(const std::string& label) const {
  return std::find(labels_.begin(), labels_.end(), label) != labels_.end();
}

std::string ThemeRegistry::numbered_list() const {
  std::string out;
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    out += std::to_string(i + 1) + ". " + labels_[i] + "\n";
  }
  return out;
}

ThreatGenResult generate_threat_candidates(const GenContext& ctx, const GenerationSpec& spec,
                                           const scenario::Dataset& seed_set) {
  const auto& tpl = ctx.prompts->get("gen_threat");
  const std::string system_text = tpl.instantiate({
      {"SHOTS", shot_block_threat(seed_set, spec.shot_count)},
      {"SPEC", spec_description(spec)},
  });
  const ChatRequest request = make_request(ctx, system_text, kGenerateDirective);
  const std::string prompt_hash = std::to_string(fnv1a(backend::canonical_bytes(request)));

  ThreatGenResult result;
  for (int i = 0; i < spec.target_count; ++i) {
    backend::Completion completion = ctx.backend->complete(request);
    if (!completion.ok()) {
      result.rejections.push_back({"", "provider error"});
      continue;
    }
    auto block = fenced_block(completion.text, "scenario");
    if (!block) {
      result.rejections.push_back({"", "no scenario block in output"});
      continue;
    }
    auto fields = parse_fields(*block);
    const char* required[] = {"ID", "CONTEXT", "DEFAULT_THREAT", "SURROGATE_THREAT",
                              "POINTLESS_THREAT"};
    std::string missing;
    for (const char* key : required) {
      if (fields.count(key) == 0 || fields[key].empty()) {
        missing = key;
        break;
      }
    }
    if (!missing.empty()) {
      result.rejections.push_back({fields.count("ID") ? fields["ID"] : "", "missing field " + missing});
      continue;
    }
    CandidateScenario candidate;
    candidate.scenario.id = fields["ID"];
    candidate.scenario.context_template = fields["CONTEXT"];
    candidate.scenario.default_threat_template = fields["DEFAULT_THREAT"];
    candidate.scenario.surrogate_threat_template = fields["SURROGATE_THREAT"];
    candidate.scenario.pointless_threat_template = fields["POINTLESS_THREAT"];
    candidate.scenario.tone = spec.tone;
    if (fields.count("TAGS")) {
      std::istringstream tag_stream(fields["TAGS"]);
      std::string tag;
      while (std::getline(tag_stream, tag, ',')) {
        tag = trimmed(tag);
        if (!tag.empty() && scenario::known_tags().count(tag) > 0) {
          candidate.scenario.tags.insert(tag);
        }
      }
    }
    candidate.prompt_hash = prompt_hash;
    candidate.model_id = ctx.defaults.model_id;
    result.candidates.push_back(std::move(candidate));
  }
  return result;
}

CandidateScenario quoteify(const GenContext& ctx, const CandidateScenario& candidate) {
  CandidateScenario out = candidate;
  const auto& quote_tpl = ctx.prompts->get("gen_quote");
  const auto& merge_tpl = ctx.prompts->get("gen_quote_merge");

  struct Style {
    const char* name;
    std::string scenario::ThreatScenario::* field;
  };
  const Style styles[] = {
      {"default", &scenario::ThreatScenario::default_threat_template},
      {"surrogate", &scenario::ThreatScenario::surrogate_threat_template},
      {"pointless", &scenario::ThreatScenario::pointless_threat_template},
  };

  for (const auto& style : styles) {
    const std::string& threat_text = out.scenario.*style.field;
    backend::Completion quote = ctx.backend->complete(
        make_request(ctx, quote_tpl.instantiate({{"STYLE", style.name}}), threat_text));
    if (!quote.ok() || interventions::looks_like_refusal(quote.text) || trimmed(quote.text).empty()) {
      out.flags.push_back(std::string("quote-failed:") + style.name);
      continue;
    }
    backend::Completion merged = ctx.backend->complete(
        make_request(ctx, merge_tpl.text, threat_text + "\n\nQUOTE: " + trimmed(quote.text)));
    if (!merged.ok() || interventions::looks_like_refusal(merged.text) ||
        trimmed(merged.text).empty()) {
      out.flags.push_back(std::string("merge-failed:") + style.name);
      continue;
    }
    out.scenario.*style.field = trimmed(merged.text);
  }
  return out;
}

NonThreatGenResult generate_nonthreat_candidates(const GenContext& ctx, scenario::Intent intent,
                                                 int target_count, const scenario::Dataset& seed_set) {
  const auto& tpl = ctx.prompts->get("gen_nonthreat");
  const std::string system_text = tpl.instantiate({
      {"SHOTS", shot_block_nonthreat(seed_set, 12)},
      {"INTENT", intent_suffix(intent)},
  });
  const ChatRequest request = make_request(ctx, system_text, kGenerateDirective);
  const std::string prompt_hash = std::to_string(fnv1a(backend::canonical_bytes(request)));

  NonThreatGenResult result;
  for (int i = 0; i < target_count; ++i) {
    backend::Completion completion = ctx.backend->complete(request);
    if (!completion.ok()) {
      result.rejections.push_back({"", "provider error"});
      continue;
    }
    auto block = fenced_block(completion.text, "nonthreat");
    if (!block) {
      result.rejections.push_back({"", "no nonthreat block in output"});
      continue;
    }
    auto fields = parse_fields(*block);
    if (fields["ID"].empty() || fields["TEXT"].empty() || fields["ACTION"].empty()) {
      result.rejections.push_back({fields["ID"], "missing ID, TEXT, or ACTION"});
      continue;
    }
    NonThreatCandidate candidate;
    candidate.scenario.id = fields["ID"];
    candidate.scenario.text = fields["TEXT"];
    candidate.scenario.intent = intent;
    candidate.scenario.burn_preventing_action = fields["ACTION"];
    candidate.prompt_hash = prompt_hash;
    candidate.model_id = ctx.defaults.model_id;
    result.candidates.push_back(std::move(candidate));
  }
  return result;
}

FilterResult filter_candidates(const GenContext& ctx,
                               const std::vector<NonThreatCandidate>& candidates) {
  const auto& instructions_tpl = ctx.prompts->get("check_instructions");
  const auto& threat_tpl = ctx.prompts->get("check_threat");

  FilterResult result;
  for (const auto& candidate : candidates) {
    const auto compliant = checked_yes_no(
        ctx, make_request(ctx, instructions_tpl.text, candidate.scenario.text), "COMPLIANT:");
    if (compliant == interventions::YesNo::Invalid) {
      result.rejections.push_back({candidate.scenario.id, "checker-invalid"});
      continue;
    }
    if (compliant == interventions::YesNo::No) {
      result.rejections.push_back({candidate.scenario.id, "instructions"});
      continue;
    }
    const auto has_threat =
        checked_yes_no(ctx, make_request(ctx, threat_tpl.text, candidate.scenario.text), "THREAT:");
    if (has_threat == interventions::YesNo::Invalid) {
      result.rejections.push_back({candidate.scenario.id, "checker-invalid"});
      continue;
    }
    if (has_threat == interventions::YesNo::Yes) {
      result.rejections.push_back({candidate.scenario.id, "contains-threat"});
      continue;
    }
    result.kept.push_back(candidate);
  }
  return result;
}

std::set<std::string> tag_themes(const GenContext& ctx, NonThreatCandidate& candidate,
                                 const ThemeRegistry& registry) {
  const auto& tpl = ctx.prompts->get("tag_themes");
  const ChatRequest request =
      make_request(ctx, tpl.instantiate({{"THEMES", registry.numbered_list()}}),
                   candidate.scenario.text);

  for (int attempt = 0; attempt < ctx.checker_retries; ++attempt) {
    backend::Completion completion = ctx.backend->complete(request);
    if (!completion.ok()) break;
    const std::string& text = completion.text;
    auto pos = text.rfind("THEMES:");
    if (pos == std::string::npos) continue;
    std::string rest = text.substr(pos + 7);
    if (auto newline = rest.find('\n'); newline != std::string::npos) rest = rest.substr(0, newline);
    std::set<std::string> themes;
    std::istringstream stream(rest);
    std::string label;
    while (std::getline(stream, label, ';')) {
      label = trimmed(label);
      if (label.empty()) continue;
      if (registry.contains(label)) {
        themes.insert(label);
      } else {
        candidate.flags.push_back("unknown-theme:" + label);
      }
    }
    if (themes.empty()) candidate.flags.push_back("no-themes");
    candidate.scenario.themes = themes;
    return themes;
  }
  candidate.flags.push_back("theme-checker-invalid");
  candidate.scenario.themes.clear();
  return {};
}

std::map<std::string, double> theme_shares(const std::vector<NonThreatCandidate>& candidates) {
  std::map<std::string, double> shares;
  if (candidates.empty()) return shares;
  for (const auto& candidate : candidates) {
    for (const auto& theme : candidate.scenario.themes) shares[theme] += 1.0;
  }
  for (auto& [theme, count] : shares) count /= static_cast<double>(candidates.size());
  return shares;
}

BalanceThemesResult balance_themes(const std::vector<NonThreatCandidate>& candidates,
                                   double target_max_share, std::size_t floor_count,
                                   std::uint64_t seed) {
  BalanceThemesResult result;
  std::vector<std::size_t> alive(candidates.size());
  std::iota(alive.begin(), alive.end(), 0);

  // Tie-break rank: a seeded permutation fixed up front.
  std::vector<std::size_t> rank(candidates.size());
  std::iota(rank.begin(), rank.end(), 0);
  auto rng = seeded_rng(seed);
  std::shuffle(rank.begin(), rank.end(), rng);

  auto max_share = [&](const std::vector<std::size_t>& members) {
    std::map<std::string, std::size_t> counts;
    for (auto index : members) {
      for (const auto& theme : candidates[index].scenario.themes) ++counts[theme];
    }
    double best = 0.0;
    for (const auto& [theme, count] : counts) {
      best = std::max(best, static_cast<double>(count) / static_cast<double>(members.size()));
    }
    return best;
  };

  while (alive.size() > floor_count) {
    const double current = max_share(alive);
    if (current <= target_max_share) {
      result.reached_target = true;
      break;
    }
    // Try removing each candidate; keep the removal that lowers the maximum
    // share the most. Stop if nothing strictly helps.
    double best_share = current;
    std::size_t best_pos = alive.size();
    for (std::size_t pos = 0; pos < alive.size(); ++pos) {
      std::vector<std::size_t> without;
      without.reserve(alive.size() - 1);
      for (std::size_t i = 0; i < alive.size(); ++i) {
        if (i != pos) without.push_back(alive[i]);
      }
      if (without.empty()) continue;
      const double share = max_share(without);
      if (share < best_share ||
          (share == best_share && best_pos < alive.size() && rank[alive[pos]] < rank[alive[best_pos]])) {
        best_share = share;
        best_pos = pos;
      }
    }
    if (best_pos >= alive.size() || best_share >= current) break;
    alive.erase(alive.begin() + static_cast<std::ptrdiff_t>(best_pos));
    ++result.removed;
  }
  if (max_share(alive) <= target_max_share) result.reached_target = true;

  for (auto index : alive) result.kept.push_back(candidates[index]);
  return result;
}

void emit_review_queue(const std::vector<CandidateScenario>& candidates,
                       const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write review queue: " + path.string());
  for (const auto& candidate : candidates) {
    out << json{{"status", to_string(candidate.status)},
                {"flags", candidate.flags},
                {"prompt_hash", candidate.prompt_hash},
                {"model", candidate.model_id},
                {"scenario", scenario::to_json(candidate.scenario)}}
               .dump()
        << '\n';
  }
}

std::vector<CandidateScenario> load_review_queue(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open review queue: " + path.string());
  std::vector<CandidateScenario> candidates;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json doc = json::parse(line);
    CandidateScenario candidate;
    candidate.status = review_status_from_string(doc.at("status").get<std::string>());
    candidate.flags = doc.value("flags", std::vector<std::string>{});
    candidate.prompt_hash = doc.value("prompt_hash", "");
    candidate.model_id = doc.value("model", "");
    candidate.scenario = scenario::threat_scenario_from_json(doc.at("scenario"));
    candidates.push_back(std::move(candidate));
  }
  return candidates;
}

scenario::Dataset accepted_to_dataset(const std::vector<CandidateScenario>& candidates) {
  scenario::Dataset dataset;
  for (const auto& candidate : candidates) {
    if (candidate.status == ReviewStatus::Accepted || candidate.status == ReviewStatus::Corrected) {
      dataset.scenarios.push_back(candidate.scenario);
    }
  }
  return dataset;
}

}  // namespace sg::gen
