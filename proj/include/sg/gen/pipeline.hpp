#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "sg/backend/chat.hpp"
#include "sg/interventions/pipeline.hpp"
#include "sg/prompts/library.hpp"
#include "sg/scenario/types.hpp"

namespace sg::gen {

struct GenerationSpec {
  scenario::Tone tone = scenario::Tone::Default;
  std::set<std::string> target_tags;
  std::vector<std::string> numeric_placeholders;
  int shot_count = 12;
  int target_count = 1;
};

enum class ReviewStatus { Pending, Accepted, Rejected, Corrected };

std::string to_string(ReviewStatus status);
ReviewStatus review_status_from_string(const std::string& name);

struct CandidateScenario {
  scenario::ThreatScenario scenario;
  std::string prompt_hash;
  std::string model_id;
  ReviewStatus status = ReviewStatus::Pending;
  std::vector<std::string> flags;
};

struct NonThreatCandidate {
  scenario::NonThreatScenario scenario;
  std::string prompt_hash;
  std::string model_id;
  ReviewStatus status = ReviewStatus::Pending;
  std::vector<std::string> flags;
};

struct Rejection {
  std::string candidate_id;
  std::string reason;
};

/// The 20 theme labels used to diversify the non-threat dataset.
class ThemeRegistry {
 public:
  static ThemeRegistry load(const std::filesystem::path& path);
  static ThemeRegistry from_labels(std::vector<std::string> labels);

  const std::vector<std::string>& labels() const { return labels_; }
  bool contains(const std::string& label) const;
  std::string numbered_list() const;

 private:
  std::vector<std::string> labels_;
};

struct GenContext {
  backend::ChatBackend* backend = nullptr;
  const prompts::Library* prompts = nullptr;
  interventions::RequestDefaults defaults;
  int checker_retries = 10;
};

struct ThreatGenResult {
  std::vector<CandidateScenario> candidates;
  std::vector<Rejection> rejections;
};

/// Prompts for new threat scenarios with a shot block drawn from the seed
/// set and parses the fenced-block output; malformed blocks are rejected
/// with reasons.
ThreatGenResult generate_threat_candidates(const GenContext& ctx, const GenerationSpec& spec,
                                           const scenario::Dataset& seed_set);

/// Two-stage rewrite: generate a spoken quote for each threat style, then
/// merge it into the threat text. A failed stage leaves the candidate
/// unmodified and flagged.
CandidateScenario quoteify(const GenContext& ctx, const CandidateScenario& candidate);

struct NonThreatGenResult {
  std::vector<NonThreatCandidate> candidates;
  std::vector<Rejection> rejections;
};

NonThreatGenResult generate_nonthreat_candidates(const GenContext& ctx, scenario::Intent intent,
                                                 int target_count, const scenario::Dataset& seed_set);

struct FilterResult {
  std::vector<NonThreatCandidate> kept;
  std::vector<Rejection> rejections;
};

/// Keeps a candidate iff the instruction-compliance check passes and the
/// threat-presence check reports no threat.
FilterResult filter_candidates(const GenContext& ctx, const std::vector<NonThreatCandidate>& candidates);

/// Model-reported subset of the registry; unknown labels are dropped and
/// flagged, an empty report is flagged.
std::set<std::string> tag_themes(const GenContext& ctx, NonThreatCandidate& candidate,
                                 const ThemeRegistry& registry);

std::map<std::string, double> theme_shares(const std::vector<NonThreatCandidate>& candidates);

struct BalanceThemesResult {
  std::vector<NonThreatCandidate> kept;
  std::size_t removed = 0;
  bool reached_target = false;
};

/// Greedy removal: repeatedly drop the candidate whose removal most reduces
/// the maximum theme share, until the target share (or the floor count) is
/// reached; stops early if no removal helps. Ties break by seeded order.
BalanceThemesResult balance_themes(const std::vector<NonThreatCandidate>& candidates,
                                   double target_max_share, std::size_t floor_count,
                                   std::uint64_t seed);

void emit_review_queue(const std::vector<CandidateScenario>& candidates,
                       const std::filesystem::path& path);
std::vector<CandidateScenario> load_review_queue(const std::filesystem::path& path);

/// Only accepted or corrected candidates become dataset scenarios.
scenario::Dataset accepted_to_dataset(const std::vector<CandidateScenario>& candidates);

}  // namespace sg::gen
