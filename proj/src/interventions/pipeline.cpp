#include "sg/interventions/pipeline.hpp"

#include "sg/common/errors.hpp"

namespace sg::interventions {

namespace {

using backend::ChatRequest;
using backend::Message;
using backend::Role;

ChatRequest base_request(const RequestDefaults& defaults) {
  ChatRequest request;
  request.model_id = defaults.model_id;
  request.temperature = defaults.temperature;
  request.max_tokens = defaults.max_tokens;
  return request;
}

}  // namespace

ChatRequest build_request(const MethodSpec& method, const std::string& scenario_text,
                          const prompts::Library& prompts, const RequestDefaults& defaults) {
  method.check();
  const auto& task = prompts.get(method.cot ? prompts::Library::kThreatTaskCot
                                            : prompts::Library::kThreatTaskNoCot);
  std::string system_text;
  switch (method.kind) {
    case MethodKind::Baseline:
      system_text = task.text;
      break;
    case MethodKind::SimplePrompt:
      system_text = prompts.get(prompts::Library::kSgSimple).text + "\n\n" + task.text;
      break;
    case MethodKind::FineTunedE2E:
      // Only variant C carries the surrogate goal prompt; its training
      // targets are the only ones that reason about surrogate goals.
      if (*method.ft_variant == FtVariant::C) {
        system_text = prompts.get(prompts::Library::kSgSimple).text + "\n\n" + task.text;
      } else {
        system_text = task.text;
      }
      break;
    case MethodKind::ThreeStep:
      throw Error("three_step is a pipeline, not a single request");
  }
  ChatRequest request = base_request(defaults);
  request.messages.push_back({Role::System, std::move(system_text)});
  request.messages.push_back({Role::User, scenario_text});
  return request;
}

Detection detect_surrogate(backend::ChatBackend& backend, const std::string& scenario_text,
                           const prompts::Library& prompts, const RequestDefaults& defaults,
                           int max_retries) {
  ChatRequest request = base_request(defaults);
  request.messages.push_back({Role::System, prompts.get(prompts::Library::kSgDetection).text});
  request.messages.push_back({Role::User, scenario_text});

  for (int attempt = 0; attempt < max_retries; ++attempt) {
    backend::Completion completion = backend.complete(request);
    if (!completion.ok()) return Detection::Invalid;
    switch (parse_yes_no(completion.text, "ANSWER:")) {
      case YesNo::Yes: return Detection::Yes;
      case YesNo::No: return Detection::No;
      case YesNo::Refusal:
      case YesNo::Invalid:
        break;
    }
  }
  return Detection::Invalid;
}

TranslationResult translate(backend::ChatBackend& backend, const std::string& scenario_text,
                            TranslatorKind translator, const prompts::Library& prompts,
                            const RequestDefaults& defaults, int max_retries) {
  const auto& tpl = prompts.get(prompts::Library::kSgTranslation);
  std::string few_shot;
  if (translator == TranslatorKind::FewShot) {
    few_shot = prompts.get(prompts::Library::kSgTranslationFewShot).text;
  }
  ChatRequest request = base_request(defaults);
  if (translator == TranslatorKind::FineTuned && !defaults.translator_model_id.empty()) {
    request.model_id = defaults.translator_model_id;
  }
  request.messages.push_back({Role::System, tpl.instantiate({{"FEW_SHOT", few_shot}})});
  request.messages.push_back({Role::User, scenario_text});

  TranslationResult result;
  for (int attempt = 0; attempt < max_retries; ++attempt) {
    backend::Completion completion = backend.complete(request);
    if (!completion.ok()) return result;
    if (looks_like_refusal(completion.text)) {
      result.status = TranslationResult::Status::Refused;
      continue;
    }
    result.status = TranslationResult::Status::Ok;
    result.text = completion.text;
    return result;
  }
  return result;
}

ThreeStepRun run_three_step_raw(backend::ChatBackend& backend, const std::string& scenario_text,
                                const Step3Builder& step3, TranslatorKind translator,
                                const prompts::Library& prompts, const RequestDefaults& defaults,
                                int max_retries) {
  ThreeStepRun run;
  run.detection = detect_surrogate(backend, scenario_text, prompts, defaults, max_retries);
  if (run.detection == Detection::Invalid) return run;

  std::string response_text = scenario_text;
  if (run.detection == Detection::Yes) {
    run.translation = translate(backend, scenario_text, translator, prompts, defaults, max_retries);
    if (run.translation->status == TranslationResult::Status::Ok) {
      response_text = run.translation->text;
    } else {
      run.translation_fallback = true;
    }
  }

  // The final step runs in a fresh context containing no surrogate-goal
  // material.
  run.step3_request = step3(response_text);
  run.step3_completion = backend.complete(run.step3_request);
  run.step3_ran = true;
  return run;
}

ThreeStepOutcome run_three_step(backend::ChatBackend& backend, const std::string& scenario_text,
                                bool cot, TranslatorKind translator, const prompts::Library& prompts,
                                const RequestDefaults& defaults, int max_retries) {
  MethodSpec baseline;
  baseline.kind = MethodKind::Baseline;
  baseline.cot = cot;
  ThreeStepRun run = run_three_step_raw(
      backend, scenario_text,
      [&](const std::string& text) { return build_request(baseline, text, prompts, defaults); },
      translator, prompts, defaults, max_retries);

  ThreeStepOutcome outcome;
  outcome.detection = run.detection;
  outcome.translation = run.translation;
  outcome.translation_fallback = run.translation_fallback;
  outcome.step3_request = run.step3_request;
  if (!run.step3_ran || !run.step3_completion.ok()) {
    outcome.decision.kind = DecisionKind::Invalid;
    return outcome;
  }
  outcome.decision = parse_decision(run.step3_completion.text);
  return outcome;
}

backend::SampleClass classify_decision_text(const std::string& text) {
  switch (parse_decision(text).kind) {
    case DecisionKind::GiveIn:
    case DecisionKind::NotGiveIn:
      return backend::SampleClass::Valid;
    case DecisionKind::Refusal:
      return backend::SampleClass::Refusal;
    case DecisionKind::Invalid:
      return backend::SampleClass::Invalid;
  }
  return backend::SampleClass::Invalid;
}

}  // namespace sg::interventions
