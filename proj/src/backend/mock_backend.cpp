#include "sg/backend/mock_backend.hpp"

#include <algorithm>
#include <thread>

#include "sg/common/errors.hpp"
#include "sg/common/rng.hpp"
#include "sg/scenario/render.hpp"

namespace sg::backend {

namespace {

bool matches(const std::string& pattern, const std::string& value) {
  return pattern == "*" || pattern == value;
}

}  // namespace

double MockBehavior::probability_for(const BehaviorKey& key) const {
  double p;
  if (auto it = give_in.find(key); it != give_in.end()) {
    p = it->second;
  } else if (derive_per_scenario) {
    const double u =
        static_cast<double>(mix_seed(rng_seed, fnv1a(key.scenario_id)) >> 11) * 0x1.0p-53;
    p = derive_min + u * (derive_max - derive_min);
  } else {
    p = default_give_in;
  }
  for (const auto& rule : delta_rules) {
    if (matches(rule.kind, key.kind) && matches(rule.tag, key.tag)) p += rule.delta;
  }
  return std::clamp(p, 0.0, 1.0);
}

MockBackend::MockBackend(MockBehavior behavior) : behavior_(std::move(behavior)) {}

void MockBackend::register_scenario_text(const std::string& text, const std::string& scenario_id,
                                         const std::string& kind) {
  text_index_[text] = TextKey{scenario_id, kind};
}

void MockBackend::register_dataset(const scenario::Dataset& dataset) {
  for (const auto& s : dataset.scenarios) {
    const auto params = scenario::default_params(s);
    const std::string default_text = scenario::render(s, scenario::ThreatKind::Default, params);
    const std::string surrogate_text = scenario::render(s, scenario::ThreatKind::Surrogate, params);
    const std::string pointless_text = scenario::render(s, scenario::ThreatKind::Pointless, params);
    register_scenario_text(default_text, s.id, "default");
    register_scenario_text(surrogate_text, s.id, "surrogate");
    register_scenario_text(pointless_text, s.id, "pointless");
    behavior_.translation_table.emplace(surrogate_text, default_text);
  }
  register_non_threat(dataset);
}

void MockBackend::register_non_threat(const scenario::Dataset& dataset) {
  for (const auto& s : dataset.non_threat) register_scenario_text(s.text, s.id, "nonthreat");
}

void MockBackend::adopt_prompt_markers(const prompts::Library& prompts) {
  behavior_.detection_needle = prompts.get(prompts::Library::kSgDetection).fingerprint();
  behavior_.translation_needle = prompts.get(prompts::Library::kSgTranslation).fingerprint();
  behavior_.tag_rules.push_back({"", prompts.get(prompts::Library::kSgSimple).fingerprint(), "sg"});
}

std::size_t MockBackend::call_count() const {
  std::lock_guard lock(mutex_);
  return log_.size();
}

std::vector<CallRecord> MockBackend::call_log() const {
  std::lock_guard lock(mutex_);
  return log_;
}

int MockBackend::peak_in_flight() const {
  std::lock_guard lock(mutex_);
  return peak_in_flight_;
}

void MockBackend::reset_log() {
  std::lock_guard lock(mutex_);
  log_.clear();
  sequence_ = 0;
}

std::string MockBackend::resolve_tag(const ChatRequest& request) const {
  for (const auto& rule : behavior_.tag_rules) {
    if (!rule.model_id.empty() && rule.model_id != request.model_id) continue;
    if (!rule.needle.empty()) {
      bool found = false;
      for (const auto& m : request.messages) {
        if (m.content.find(rule.needle) != std::string::npos) {
          found = true;
          break;
        }
      }
      if (!found) continue;
    }
    return rule.tag;
  }
  return "plain";
}

Completion MockBackend::decision_completion(const std::string& scenario_id, const std::string& kind,
                                            const std::string& tag, std::mt19937_64& rng) const {
  const double p = behavior_.probability_for({scenario_id, kind, tag});
  const bool positive = uniform01(rng) < p;
  Completion completion;
  if (kind == "nonthreat") {
    completion.text = std::string("Considering the situation and its stakes.\nTAKE ACTION: ") +
                      (positive ? "YES" : "NO");
  } else {
    completion.text = std::string("Weighing the demand against the cost of compliance.\nFINAL ANSWER: ") +
                      (positive ? "GIVE IN" : "NOT GIVE IN");
  }
  return completion;
}

Completion MockBackend::complete(const ChatRequest& request) {
  if (behavior_.latency.count() > 0) std::this_thread::sleep_for(behavior_.latency);

  const std::string bytes = canonical_bytes(request);
  const std::uint64_t request_hash = fnv1a(bytes);

  std::uint64_t counter;
  std::uint64_t seq;
  {
    std::lock_guard lock(mutex_);
    counter = call_counters_[request_hash]++;
    seq = sequence_++;
    ++in_flight_;
    peak_in_flight_ = std::max(peak_in_flight_, in_flight_);
  }

  auto rng = std::mt19937_64(mix_seed(behavior_.rng_seed, request_hash, counter));
  Completion completion = respond(request, rng);

  {
    std::lock_guard lock(mutex_);
    --in_flight_;
    log_.push_back({seq, bytes, completion.text});
  }
  return completion;
}

nlohmann::json to_json(const MockBehavior& behavior) {
  nlohmann::json give_in = nlohmann::json::array();
  for (const auto& [key, p] : behavior.give_in) {
    give_in.push_back(
        {{"scenario_id", key.scenario_id}, {"kind", key.kind}, {"tag", key.tag}, {"p", p}});
  }
  nlohmann::json deltas = nlohmann::json::array();
  for (const auto& rule : behavior.delta_rules) {
    deltas.push_back({{"kind", rule.kind}, {"tag", rule.tag}, {"delta", rule.delta}});
  }
  nlohmann::json scripted = nlohmann::json::array();
  for (const auto& [user_text, rule] : behavior.scripted) {
    scripted.push_back({{"user_text", user_text},
                        {"response", rule.response},
                        {"refuse_tags", rule.refuse_tags},
                        {"invalid_prob_by_tag", rule.invalid_prob_by_tag}});
  }
  return nlohmann::json{
      {"seed", behavior.rng_seed},
      {"default_give_in", behavior.default_give_in},
      {"refusal_probability", behavior.refusal_probability},
      {"invalid_probability", behavior.invalid_probability},
      {"detector_accuracy", behavior.detector_accuracy},
      {"derive_per_scenario", behavior.derive_per_scenario},
      {"derive_min", behavior.derive_min},
      {"derive_max", behavior.derive_max},
      {"give_in", std::move(give_in)},
      {"delta_rules", std::move(deltas)},
      {"scripted", std::move(scripted)},
  };
}

MockBehavior mock_behavior_from_json(const nlohmann::json& doc) {
  MockBehavior behavior;
  behavior.rng_seed = doc.value("seed", std::uint64_t{0});
  behavior.default_give_in = doc.value("default_give_in", 0.25);
  behavior.refusal_probability = doc.value("refusal_probability", 0.0);
  behavior.invalid_probability = doc.value("invalid_probability", 0.0);
  behavior.detector_accuracy = doc.value("detector_accuracy", 1.0);
  behavior.derive_per_scenario = doc.value("derive_per_scenario", false);
  behavior.derive_min = doc.value("derive_min", 0.1);
  behavior.derive_max = doc.value("derive_max", 0.9);
  if (doc.contains("give_in")) {
    for (const auto& entry : doc.at("give_in")) {
      behavior.give_in[{entry.at("scenario_id").get<std::string>(),
                        entry.at("kind").get<std::string>(), entry.at("tag").get<std::string>()}] =
          entry.at("p").get<double>();
    }
  }
  if (doc.contains("delta_rules")) {
    for (const auto& entry : doc.at("delta_rules")) {
      behavior.delta_rules.push_back({entry.value("kind", "*"), entry.value("tag", "*"),
                                      entry.at("delta").get<double>()});
    }
  }
  if (doc.contains("scripted")) {
    for (const auto& entry : doc.at("scripted")) {
      ScriptedRule rule;
      rule.response = entry.value("response", "");
      rule.refuse_tags = entry.value("refuse_tags", std::set<std::string>{});
      if (entry.contains("invalid_prob_by_tag")) {
        for (const auto& [tag, p] : entry.at("invalid_prob_by_tag").items()) {
          rule.invalid_prob_by_tag[tag] = p.get<double>();
        }
      }
      behavior.scripted[entry.at("user_text").get<std::string>()] = std::move(rule);
    }
  }
  return behavior;
}

Completion MockBackend::respond(const ChatRequest& request, std::mt19937_64& rng) {
  const std::string* user = request.last_user_content();
  const std::string tag = resolve_tag(request);

  // Scripted responses are fully deterministic apart from an optional
  // per-tag invalid chance.
  if (user) {
    if (auto it = behavior_.scripted.find(*user); it != behavior_.scripted.end()) {
      const auto& rule = it->second;
      if (rule.refuse_tags.count("*") > 0 || rule.refuse_tags.count(tag) > 0) {
        return {behavior_.refusal_text, FinishReason::Stop};
      }
      if (auto pit = rule.invalid_prob_by_tag.find(tag); pit != rule.invalid_prob_by_tag.end()) {
        if (uniform01(rng) < pit->second) return {behavior_.invalid_text, FinishReason::Stop};
      }
      return {rule.response, FinishReason::Stop};
    }
  }

  if (uniform01(rng) < behavior_.refusal_probability) {
    return {behavior_.refusal_text, FinishReason::Stop};
  }
  if (uniform01(rng) < behavior_.invalid_probability) {
    return {behavior_.invalid_text, FinishReason::Stop};
  }

  const std::string joined = request.joined_text();

  if (!behavior_.detection_needle.empty() &&
      joined.find(behavior_.detection_needle) != std::string::npos) {
    bool truth = false;
    if (user) {
      if (auto it = text_index_.find(*user); it != text_index_.end()) {
        truth = it->second.kind == "surrogate";
      }
    }
    const bool correct = uniform01(rng) < behavior_.detector_accuracy;
    const bool answer = correct ? truth : !truth;
    return {std::string("Looking for threats aimed at money burning.\nANSWER: ") +
                (answer ? "YES" : "NO"),
            FinishReason::Stop};
  }

  if (!behavior_.translation_needle.empty() &&
      joined.find(behavior_.translation_needle) != std::string::npos) {
    if (user) {
      if (auto it = behavior_.translation_table.find(*user); it != behavior_.translation_table.end()) {
        return {it->second, FinishReason::Stop};
      }
    }
    return {behavior_.refusal_text, FinishReason::Stop};
  }

  if (user) {
    if (auto it = text_index_.find(*user); it != text_index_.end()) {
      return decision_completion(it->second.scenario_id, it->second.kind, tag, rng);
    }
  }
  return decision_completion("", "default", tag, rng);
}

}  // namespace sg::backend
