#pragma once

#include <optional>
#include <string>

#include "sg/backend/chat.hpp"
#include "sg/backend/sampling.hpp"
#include "sg/interventions/method.hpp"
#include "sg/prompts/library.hpp"

namespace sg::interventions {

/// Request parameters shared by every prompt composition in a run.
struct RequestDefaults {
  std::string model_id = "mock";
  double temperature = 1.0;
  int max_tokens = 1024;
  /// Model used for the translation step when translator == FineTuned.
  std::string translator_model_id;
};

/// Composes the chat request for single-request methods (Baseline,
/// SimplePrompt, FineTunedE2E). Pure and total on valid MethodSpecs.
backend::ChatRequest build_request(const MethodSpec& method, const std::string& scenario_text,
                                   const prompts::Library& prompts, const RequestDefaults& defaults);

enum class Detection { Yes, No, Invalid };

/// Step 1: does the scenario contain a surrogate threat? Retries invalid
/// outputs up to max_retries attempts.
Detection detect_surrogate(backend::ChatBackend& backend, const std::string& scenario_text,
                           const prompts::Library& prompts, const RequestDefaults& defaults,
                           int max_retries);

struct TranslationResult {
  enum class Status { Ok, Refused, Invalid };
  Status status = Status::Invalid;
  std::string text;
};

/// Step 2: rewrite the surrogate threat as its analogous default threat.
/// FewShot keeps the worked examples in the prompt; FineTuned drops them and
/// targets the designated translator model.
TranslationResult translate(backend::ChatBackend& backend, const std::string& scenario_text,
                            TranslatorKind translator, const prompts::Library& prompts,
                            const RequestDefaults& defaults, int max_retries);

/// Builds the final-step request from the (possibly translated) text. The
/// built request must contain no surrogate-goal material.
using Step3Builder = std::function<backend::ChatRequest(const std::string&)>;

struct ThreeStepRun {
  Detection detection = Detection::Invalid;
  /// Set when detection said yes and translation was attempted.
  std::optional<TranslationResult> translation;
  /// True when detection said yes but translation failed; the pipeline falls
  /// back to responding to the original text and flags the scenario.
  bool translation_fallback = false;
  bool step3_ran = false;
  backend::ChatRequest step3_request;
  backend::Completion step3_completion;
};

/// Detect, translate, respond — each step in a fresh context. The final step
/// sees only the translated (or original) text, never the detection or
/// translation prompts.
ThreeStepRun run_three_step_raw(backend::ChatBackend& backend, const std::string& scenario_text,
                                const Step3Builder& step3, TranslatorKind translator,
                                const prompts::Library& prompts, const RequestDefaults& defaults,
                                int max_retries);

struct ThreeStepOutcome {
  Decision decision;
  Detection detection = Detection::Invalid;
  std::optional<TranslationResult> translation;
  bool translation_fallback = false;
  backend::ChatRequest step3_request;
};

/// Threat-task pipeline: the response step is the plain Baseline composition,
/// so a non-surrogate input produces a request byte-identical to the Baseline
/// request.
ThreeStepOutcome run_three_step(backend::ChatBackend& backend, const std::string& scenario_text,
                                bool cot, TranslatorKind translator, const prompts::Library& prompts,
                                const RequestDefaults& defaults, int max_retries);

/// Classifier wired to parse_decision, for sample_n.
backend::SampleClass classify_decision_text(const std::string& text);

}  // namespace sg::interventions
