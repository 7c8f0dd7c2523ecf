#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "sg/backend/chat.hpp"
#include "sg/interventions/method.hpp"
#include "sg/interventions/pipeline.hpp"
#include "sg/prompts/library.hpp"
#include "sg/scenario/types.hpp"

namespace sg::ftdata {

enum class SourceTag { SelfModel, StrongModel, StrongModelSgPrompted };

std::string to_string(SourceTag tag);
SourceTag source_tag_from_string(const std::string& name);

/// One sampled response: the chain of thought plus the parsed decision.
/// Refusals and invalid outputs are excluded upstream.
struct PoolEntry {
  std::string cot_text;
  interventions::DecisionKind decision = interventions::DecisionKind::NotGiveIn;

  bool gives_in() const { return decision == interventions::DecisionKind::GiveIn; }
};

using EntryList = std::vector<PoolEntry>;

/// Sampled responses per (scenario id, threat kind) for one data source.
struct ResponsePool {
  SourceTag source_tag = SourceTag::SelfModel;
  std::map<std::pair<std::string, scenario::ThreatKind>, EntryList> entries;

  const EntryList* find(const std::string& scenario_id, scenario::ThreatKind kind) const;
};

/// Per-scenario give-in probability of the default model on the default
/// threat; the balancing target.
using TargetDistribution = std::map<std::string, double>;

struct FineTuneRecord {
  std::vector<backend::Message> input_messages;
  std::string target_response;
};

/// Rounds to nearest with ties to even (the Python `round` behavior); the
/// rounding used by the balancing rule.
long long round_half_even(double value);

/// Undersamples so the kept entries' give-in ratio approximates target_p_give_in.
/// The over-represented side is trimmed to k = round(p_keep_side_opposite ...)
/// via banker's rounding while the minority side is kept whole; dropped
/// entries are chosen by seeded uniform sampling without replacement. When
/// literal_formula is set, the trim count follows the published formula
/// verbatim (which scales by the majority count instead of the kept side).
EntryList balance(const EntryList& entries, double target_p_give_in, std::uint64_t seed,
                  bool literal_formula = false);

/// Trims every source so give-in counts all equal the minimum across sources,
/// and likewise for not-give-in counts. Selection is seeded uniform without
/// replacement.
std::vector<EntryList> equalize_across_sources(const std::vector<EntryList>& pools, std::uint64_t seed);

/// Keeps only not-give-in responses (pointless threats must never be
/// rewarded).
EntryList filter_pointless(const EntryList& entries);

struct BuildOptions {
  std::uint64_t seed = 0;
  bool literal_balance_formula = false;
  interventions::RequestDefaults defaults;
};

/// Emits the end-to-end fine-tuning records for one variant over the training
/// scenarios: surrogate, default, and pointless inputs per scenario, with
/// targets drawn per the variant's source binding after
/// balance -> equalize -> filter_pointless.
std::vector<FineTuneRecord> build_e2e_dataset(interventions::FtVariant variant,
                                              const scenario::Dataset& train,
                                              const std::vector<ResponsePool>& pools,
                                              const TargetDistribution& targets,
                                              const prompts::Library& prompts,
                                              const BuildOptions& options);

struct TranslationPair {
  std::string scenario_id;
  std::vector<backend::Message> input_messages;
  std::string target_text;
};

/// One (surrogate prompt minus few-shot, default text) pair per training
/// scenario, rendered with the fixed default parameters.
std::vector<TranslationPair> build_translation_dataset(const scenario::Dataset& train,
                                                       const prompts::Library& prompts,
                                                       const interventions::RequestDefaults& defaults);

void emit_jsonl(const std::vector<FineTuneRecord>& records, const std::filesystem::path& path);
std::vector<FineTuneRecord> read_jsonl(const std::filesystem::path& path);

void emit_translation_jsonl(const std::vector<TranslationPair>& pairs, const std::filesystem::path& path);

/// Sidecar manifest describing an emitted training file. The hyperparameters
/// are informational; job submission happens out of band.
nlohmann::json training_manifest(interventions::FtVariant variant, std::uint64_t split_seed,
                                 const std::vector<SourceTag>& source_tags, std::size_t record_count);

}  // namespace sg::ftdata
