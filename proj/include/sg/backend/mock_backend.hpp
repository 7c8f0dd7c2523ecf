#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "sg/backend/chat.hpp"
#include "sg/prompts/library.hpp"
#include "sg/scenario/types.hpp"

namespace sg::backend {

/// Key of a behavior cell: scenario id, kind label ("default", "surrogate",
/// "pointless", "nonthreat"), and the method tag derived from the request.
struct BehaviorKey {
  std::string scenario_id;
  std::string kind;
  std::string tag;

  auto operator<=>(const BehaviorKey&) const = default;
};

/// Additive probability adjustment for cells matching kind/tag ("*" matches
/// anything).
struct DeltaRule {
  std::string kind = "*";
  std::string tag = "*";
  double delta = 0.0;
};

/// Derives a method tag from the request. Either condition may be empty;
/// non-empty conditions must all hold.
struct TagRule {
  std::string model_id;
  std::string needle;
  std::string tag;
};

/// Deterministic response for an exact last-user-message match.
struct ScriptedRule {
  std::string response;
  std::set<std::string> refuse_tags;                   // refuse when tag in set ("*" = always)
  std::map<std::string, double> invalid_prob_by_tag;   // chance of garbled output per tag
};

struct MockBehavior {
  std::uint64_t rng_seed = 0;
  double default_give_in = 0.25;
  double refusal_probability = 0.0;
  double invalid_probability = 0.0;
  double detector_accuracy = 1.0;
  std::chrono::milliseconds latency{0};

  /// Explicit probabilities win over the derived per-scenario base.
  std::map<BehaviorKey, double> give_in;
  /// When set, the base probability is hash-derived from (seed, scenario id)
  /// uniformly in [derive_min, derive_max] — identical across kinds and tags,
  /// so an unconfigured intervention is a true null.
  bool derive_per_scenario = false;
  double derive_min = 0.1;
  double derive_max = 0.9;
  std::vector<DeltaRule> delta_rules;

  std::unordered_map<std::string, std::string> translation_table;  // surrogate text -> default text
  std::vector<TagRule> tag_rules;
  std::unordered_map<std::string, ScriptedRule> scripted;  // exact user message -> rule

  std::string detection_needle;    // marks detection-task requests
  std::string translation_needle;  // marks translation-task requests
  std::string refusal_text = "I'm sorry, but I can't help with that request.";
  std::string invalid_text = "(unintelligible output with no recognizable answer)";

  /// Resolved give-in probability for a cell, before clamping.
  double probability_for(const BehaviorKey& key) const;
};

nlohmann::json to_json(const MockBehavior& behavior);
MockBehavior mock_behavior_from_json(const nlohmann::json& doc);

struct CallRecord {
  std::uint64_t sequence = 0;
  std::string request_bytes;
  std::string response_text;
};

/// Deterministic stand-in for a chat-completion provider. Behavior is keyed
/// by exact scenario-text lookup on the last user message; the RNG stream is
/// partitioned per request content, so a fixed request sequence reproduces a
/// bit-identical completion stream.
class MockBackend : public ChatBackend {
 public:
  explicit MockBackend(MockBehavior behavior);

  Completion complete(const ChatRequest& request) override;

  /// Registers the rendered texts of every scenario/kind so requests can be
  /// recognized, and fills the translation table (surrogate -> default).
  void register_dataset(const scenario::Dataset& dataset);
  void register_scenario_text(const std::string& text, const std::string& scenario_id,
                              const std::string& kind);
  /// Registers non-threat scenario texts under kind "nonthreat".
  void register_non_threat(const scenario::Dataset& dataset);
  /// Pulls task-type needles (and the sg tag rule) from the prompt library.
  void adopt_prompt_markers(const prompts::Library& prompts);

  MockBehavior& behavior() { return behavior_; }
  const MockBehavior& behavior() const { return behavior_; }

  std::size_t call_count() const;
  std::vector<CallRecord> call_log() const;
  int peak_in_flight() const;
  void reset_log();

 private:
  struct TextKey {
    std::string scenario_id;
    std::string kind;
  };

  Completion respond(const ChatRequest& request, std::mt19937_64& rng);
  std::string resolve_tag(const ChatRequest& request) const;
  Completion decision_completion(const std::string& scenario_id, const std::string& kind,
                                 const std::string& tag, std::mt19937_64& rng) const;

  MockBehavior behavior_;
  std::unordered_map<std::string, TextKey> text_index_;

  mutable std::mutex mutex_;
  std::unordered_map<std::uint64_t, std::uint64_t> call_counters_;
  std::vector<CallRecord> log_;
  std::uint64_t sequence_ = 0;
  int in_flight_ = 0;
  int peak_in_flight_ = 0;
};

}  // namespace sg::backend
