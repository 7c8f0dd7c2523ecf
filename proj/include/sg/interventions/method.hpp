#pragma once

#include <optional>
#include <string>
#include <vector>

namespace sg::interventions {

enum class MethodKind { Baseline, SimplePrompt, ThreeStep, FineTunedE2E };

std::string to_string(MethodKind kind);
MethodKind method_kind_from_string(const std::string& name);

enum class TranslatorKind { FewShot, FineTuned };

enum class FtVariant { A, B, C, D };

std::string to_string(FtVariant variant);
FtVariant ft_variant_from_string(const std::string& name);

struct MethodSpec {
  MethodKind kind = MethodKind::Baseline;
  bool cot = true;
  std::optional<TranslatorKind> translator;  // ThreeStep only
  std::optional<FtVariant> ft_variant;       // FineTunedE2E only

  void check() const;
  /// Stable label for cell keys and report rows, e.g. "three_step_cot".
  std::string label() const;
};

enum class DecisionKind { GiveIn, NotGiveIn, Refusal, Invalid };

std::string to_string(DecisionKind kind);

struct Decision {
  DecisionKind kind = DecisionKind::Invalid;
  std::string raw_text;
  std::optional<std::string> cot_text;

  bool valid() const { return kind == DecisionKind::GiveIn || kind == DecisionKind::NotGiveIn; }
};

/// Patterns (matched case-insensitively) that mark a completion as a refusal.
std::vector<std::string>& refusal_patterns();

bool looks_like_refusal(const std::string& text);

/// Scans for the final-answer marker; the last occurrence wins and matching
/// is case-insensitive. Texts without a marker are Invalid unless they look
/// like a refusal.
Decision parse_decision(const std::string& text);

/// Renders the canonical answer marker line for a decision.
std::string decision_marker(DecisionKind kind);

enum class YesNo { Yes, No, Refusal, Invalid };

/// Parses "<marker> YES|NO" answers (detection, non-threat action tasks).
YesNo parse_yes_no(const std::string& text, const std::string& marker);

enum class Agreement { Agree, Disagree, Refusal, Invalid };

/// Parses "ANSWER: AGREE|DISAGREE" persona responses.
Agreement parse_agreement(const std::string& text);

}  // namespace sg::interventions
