#include "sg/eval/persona.hpp"

#include <algorithm>
#include <fstream>

#include "sg/backend/throttle.hpp"
#include "sg/common/errors.hpp"

namespace sg::eval {

namespace {

using interventions::Agreement;
using interventions::MethodKind;
using interventions::MethodSpec;

backend::ChatRequest compose_persona_request(const MethodSpec& method, const std::string& statement,
                                             const prompts::Library& prompts,
                                             const interventions::RequestDefaults& defaults) {
  const auto& task = prompts.get(prompts::Library::kPersonaTask);
  std::string system_text;
  switch (method.kind) {
    case MethodKind::Baseline:
      system_text = task.text;
      break;
    case MethodKind::SimplePrompt:
      system_text = prompts.get(prompts::Library::kSgSimple).text + "\n\n" + task.text;
      break;
    case MethodKind::FineTunedE2E:
      if (*method.ft_variant == interventions::FtVariant::C) {
        system_text = prompts.get(prompts::Library::kSgSimple).text + "\n\n" + task.text;
      } else {
        system_text = task.text;
      }
      break;
    case MethodKind::ThreeStep:
      throw Error("three_step is a pipeline, not a single request");
  }
  backend::ChatRequest request;
  request.model_id = defaults.model_id;
  request.temperature = defaults.temperature;
  request.max_tokens = defaults.max_tokens;
  request.messages.push_back({backend::Role::System, std::move(system_text)});
  request.messages.push_back({backend::Role::User, statement});
  return request;
}

Agreement pose_statement(const MethodSpec& method, const std::string& statement,
                         const EvalContext& ctx, const interventions::RequestDefaults& defaults) {
  if (method.kind == MethodKind::ThreeStep) {
    MethodSpec baseline;
    baseline.kind = MethodKind::Baseline;
    baseline.cot = method.cot;
    auto run = interventions::run_three_step_raw(
        *ctx.backend, statement,
        [&](const std::string& text) {
          return compose_persona_request(baseline, text, *ctx.prompts, defaults);
        },
        *method.translator, *ctx.prompts, defaults, ctx.policy.invalid_retries);
    if (!run.step3_ran || !run.step3_completion.ok()) return Agreement::Invalid;
    return interventions::parse_agreement(run.step3_completion.text);
  }
  backend::Completion completion =
      ctx.backend->complete(compose_persona_request(method, statement, *ctx.prompts, defaults));
  if (!completion.ok()) return Agreement::Invalid;
  return interventions::parse_agreement(completion.text);
}

}  // namespace

std::vector<PersonaSet> load_personas(const std::filesystem::path& dir) {
  std::vector<PersonaSet> personas;
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().extension() == ".jsonl") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& file : files) {
    PersonaSet set;
    set.persona = file.stem().string();
    std::ifstream in(file, std::ios::binary);
    if (!in) throw IoError("cannot open persona file: " + file.string());
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      auto doc = nlohmann::json::parse(line);
      set.statements.push_back(
          {doc.at("id").get<std::string>(), doc.at("statement").get<std::string>()});
    }
    personas.push_back(std::move(set));
  }
  return personas;
}

PersonaEvalResult run_persona_eval(const std::vector<PersonaSet>& personas,
                                   const std::vector<MethodSpec>& methods, const EvalContext& ctx) {
  interventions::RequestDefaults defaults = ctx.defaults;
  defaults.temperature = ctx.deterministic_temperature;

  MethodSpec baseline;
  baseline.kind = MethodKind::Baseline;
  baseline.cot = false;  // persona agreement is evaluated without chain of thought

  std::vector<MethodSpec> combos;
  combos.push_back(baseline);
  for (const auto& m : methods) combos.push_back(m);

  struct Posed {
    std::string persona;
    std::string statement_id;
    std::string text;
  };
  std::vector<Posed> posed;
  for (const auto& set : personas) {
    for (const auto& statement : set.statements) {
      posed.push_back({set.persona, statement.id, statement.text});
    }
  }

  // responses[combo][statement index]
  std::vector<std::vector<Agreement>> responses(combos.size());
  for (std::size_t c = 0; c < combos.size(); ++c) {
    const MethodSpec& combo = combos[c];
    responses[c] = backend::run_throttled<Agreement>(
        ctx.max_in_flight, posed.size(), [&](std::size_t index) {
          return pose_statement(combo, posed[index].text, ctx, defaults);
        });
  }

  std::vector<bool> usable(posed.size(), true);
  for (std::size_t i = 0; i < posed.size(); ++i) {
    for (std::size_t c = 0; c < combos.size(); ++c) {
      if (responses[c][i] != Agreement::Agree && responses[c][i] != Agreement::Disagree) {
        usable[i] = false;
        break;
      }
    }
  }

  PersonaEvalResult result;
  result.posed_total = posed.size();
  for (const auto& set : personas) result.usable_per_persona[set.persona] = 0;
  for (std::size_t i = 0; i < posed.size(); ++i) {
    if (usable[i]) {
      ++result.usable_total;
      ++result.usable_per_persona[posed[i].persona];
    }
  }

  const double n_posed = static_cast<double>(posed.size());
  for (std::size_t c = 1; c < combos.size(); ++c) {
    std::size_t flips = 0;
    std::size_t refusals_base = 0;
    std::size_t refusals_method = 0;
    for (std::size_t i = 0; i < posed.size(); ++i) {
      if (usable[i] && responses[c][i] != responses[0][i]) ++flips;
      if (responses[0][i] == Agreement::Refusal) ++refusals_base;
      if (responses[c][i] == Agreement::Refusal) ++refusals_method;
    }
    const std::string label = combos[c].label();
    result.flip_fraction[label] =
        result.usable_total == 0 ? 0.0
                                 : static_cast<double>(flips) / static_cast<double>(result.usable_total);
    result.refusal_rate_diff[label] =
        n_posed == 0.0 ? 0.0
                       : std::abs(static_cast<double>(refusals_method) / n_posed -
                                  static_cast<double>(refusals_base) / n_posed);
  }
  return result;
}

}  // namespace sg::eval
