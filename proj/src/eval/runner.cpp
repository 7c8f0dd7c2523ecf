#include "sg/eval/runner.hpp"

#include <algorithm>

#include "sg/backend/throttle.hpp"
#include "sg/common/errors.hpp"
#include "sg/common/rng.hpp"
#include "sg/scenario/render.hpp"

namespace sg::eval {

namespace {

using interventions::Decision;
using interventions::DecisionKind;
using interventions::MethodKind;
using interventions::MethodSpec;
using scenario::ThreatKind;

std::string classification_label(const Decision& decision) { return to_string(decision.kind); }

/// One attempt toward filling a slot: a decision plus a flag for pipeline
/// fallbacks worth surfacing.
struct Attempt {
  Decision decision;
  bool flagged = false;
};

/// Slot-filling loop with the sample_n budgets: per slot, refusals are
/// retried up to refusal_retries_per_sample attempts and invalid outputs up
/// to invalid_retries attempts. Every slot runs its budget; the scenario is
/// dropped after the full pass if any slot stayed empty.
ScenarioSamples fill_scenario(const std::string& scenario_id, const backend::SamplingPolicy& policy,
                              const std::function<Attempt()>& attempt) {
  ScenarioSamples samples;
  samples.scenario_id = scenario_id;
  for (int slot = 0; slot < policy.n_samples; ++slot) {
    int refusals = 0;
    int invalids = 0;
    bool filled = false;
    while (!filled && refusals < policy.refusal_retries_per_sample &&
           invalids < policy.invalid_retries) {
      Attempt a = attempt();
      samples.flagged = samples.flagged || a.flagged;
      switch (a.decision.kind) {
        case DecisionKind::GiveIn:
        case DecisionKind::NotGiveIn:
          samples.decisions.push_back(std::move(a.decision));
          filled = true;
          break;
        case DecisionKind::Refusal:
          ++refusals;
          break;
        case DecisionKind::Invalid:
          ++invalids;
          break;
      }
    }
  }
  samples.dropped = samples.decisions.size() < static_cast<std::size_t>(policy.n_samples);
  return samples;
}

Decision yes_no_to_decision(interventions::YesNo result, const std::string& raw) {
  Decision decision;
  decision.raw_text = raw;
  switch (result) {
    case interventions::YesNo::Yes: decision.kind = DecisionKind::GiveIn; break;
    case interventions::YesNo::No: decision.kind = DecisionKind::NotGiveIn; break;
    case interventions::YesNo::Refusal: decision.kind = DecisionKind::Refusal; break;
    case interventions::YesNo::Invalid: decision.kind = DecisionKind::Invalid; break;
  }
  return decision;
}

}  // namespace

std::size_t ScenarioSamples::give_in_count() const {
  return static_cast<std::size_t>(std::count_if(
      decisions.begin(), decisions.end(),
      [](const Decision& d) { return d.kind == DecisionKind::GiveIn; }));
}

stats::SampleSet ScenarioSamples::to_sample_set(const std::string& cell_label) const {
  stats::SampleSet set;
  set.scenario_id = scenario_id;
  set.cell_label = cell_label;
  set.outcomes.reserve(decisions.size());
  for (const auto& d : decisions) set.outcomes.push_back(d.kind == DecisionKind::GiveIn ? 1 : 0);
  return set;
}

std::size_t CellData::valid_count() const {
  return static_cast<std::size_t>(std::count_if(per_scenario.begin(), per_scenario.end(),
                                                [](const ScenarioSamples& s) { return !s.dropped; }));
}

void CompletionLog::append(Entry entry) {
  std::lock_guard lock(mutex_);
  entries_.push_back(std::move(entry));
}

std::vector<CompletionLog::Entry> CompletionLog::snapshot() const {
  std::lock_guard lock(mutex_);
  return entries_;
}

EvalRunner::EvalRunner(EvalContext ctx) : ctx_(std::move(ctx)) {
  if (ctx_.dataset == nullptr || ctx_.prompts == nullptr || ctx_.backend == nullptr) {
    throw Error("EvalRunner context requires dataset, prompts, and backend");
  }
  ctx_.policy.check();
}

backend::ChatRequest build_nonthreat_request(const MethodSpec& method, const std::string& scenario_text,
                                             const prompts::Library& prompts,
                                             const interventions::RequestDefaults& defaults) {
  method.check();
  const auto& task = prompts.get(method.cot ? prompts::Library::kNonThreatTaskCot
                                            : prompts::Library::kNonThreatTaskNoCot);
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
  request.messages.push_back({backend::Role::User, scenario_text});
  return request;
}

CellData EvalRunner::collect_threat_cell(const MethodSpec& method, ThreatKind kind) {
  method.check();
  CellData cell;
  cell.model_id = ctx_.defaults.model_id;
  cell.method_label = method.label();
  cell.cell_class = "threat_" + to_string(kind);

  const auto& scenarios = ctx_.dataset->scenarios;
  cell.per_scenario = backend::run_throttled<ScenarioSamples>(
      ctx_.max_in_flight, scenarios.size(), [&](std::size_t index) {
        const auto& s = scenarios[index];
        const std::string text = scenario::render(s, kind, scenario::default_params(s));

        std::function<Attempt()> attempt;
        if (method.kind == MethodKind::ThreeStep) {
          attempt = [&, text]() {
            auto outcome = interventions::run_three_step(*ctx_.backend, text, method.cot,
                                                         *method.translator, *ctx_.prompts,
                                                         ctx_.defaults, ctx_.policy.invalid_retries);
            if (ctx_.log != nullptr && !outcome.decision.raw_text.empty()) {
              ctx_.log->append({fnv1a(backend::canonical_bytes(outcome.step3_request)),
                                backend::canonical_bytes(outcome.step3_request),
                                outcome.decision.raw_text, classification_label(outcome.decision)});
            }
            return Attempt{outcome.decision, outcome.translation_fallback};
          };
        } else {
          const backend::ChatRequest request =
              interventions::build_request(method, text, *ctx_.prompts, ctx_.defaults);
          attempt = [this, request]() {
            backend::Completion completion = ctx_.backend->complete(request);
            Decision decision;
            if (!completion.ok()) {
              decision.kind = DecisionKind::Invalid;
            } else {
              decision = interventions::parse_decision(completion.text);
            }
            if (ctx_.log != nullptr) {
              ctx_.log->append({fnv1a(backend::canonical_bytes(request)),
                                backend::canonical_bytes(request), completion.text,
                                classification_label(decision)});
            }
            return Attempt{std::move(decision), false};
          };
        }
        return fill_scenario(s.id, ctx_.policy, attempt);
      });
  return cell;
}

CellData EvalRunner::collect_nonthreat_cell(const MethodSpec& method) {
  method.check();
  CellData cell;
  cell.model_id = ctx_.defaults.model_id;
  cell.method_label = method.label();
  cell.cell_class = "nonthreat";

  const auto& scenarios = ctx_.dataset->non_threat;
  cell.per_scenario = backend::run_throttled<ScenarioSamples>(
      ctx_.max_in_flight, scenarios.size(), [&](std::size_t index) {
        const auto& s = scenarios[index];

        std::function<Attempt()> attempt;
        if (method.kind == MethodKind::ThreeStep) {
          MethodSpec baseline;
          baseline.kind = MethodKind::Baseline;
          baseline.cot = method.cot;
          attempt = [&, baseline]() {
            auto run = interventions::run_three_step_raw(
                *ctx_.backend, s.text,
                [&](const std::string& text) {
                  return build_nonthreat_request(baseline, text, *ctx_.prompts, ctx_.defaults);
                },
                *method.translator, *ctx_.prompts, ctx_.defaults, ctx_.policy.invalid_retries);
            Decision decision;
            if (run.step3_ran && run.step3_completion.ok()) {
              decision = yes_no_to_decision(
                  interventions::parse_yes_no(run.step3_completion.text, "TAKE ACTION:"),
                  run.step3_completion.text);
            }
            return Attempt{std::move(decision), run.translation_fallback};
          };
        } else {
          const backend::ChatRequest request =
              build_nonthreat_request(method, s.text, *ctx_.prompts, ctx_.defaults);
          attempt = [this, request]() {
            backend::Completion completion = ctx_.backend->complete(request);
            Decision decision;
            if (completion.ok()) {
              decision = yes_no_to_decision(
                  interventions::parse_yes_no(completion.text, "TAKE ACTION:"), completion.text);
            }
            if (ctx_.log != nullptr) {
              ctx_.log->append({fnv1a(backend::canonical_bytes(request)),
                                backend::canonical_bytes(request), completion.text,
                                classification_label(decision)});
            }
            return Attempt{std::move(decision), false};
          };
        }
        return fill_scenario(s.id, ctx_.policy, attempt);
      });
  return cell;
}

const CellData& EvalRunner::baseline_threat_cell(ThreatKind kind, bool cot) {
  const std::string key = "threat_" + to_string(kind) + (cot ? "_cot" : "_no_cot");
  auto it = baseline_cache_.find(key);
  if (it == baseline_cache_.end()) {
    MethodSpec baseline;
    baseline.kind = MethodKind::Baseline;
    baseline.cot = cot;
    it = baseline_cache_.emplace(key, collect_threat_cell(baseline, kind)).first;
  }
  return it->second;
}

const CellData& EvalRunner::baseline_nonthreat_cell(bool cot) {
  const std::string key = std::string("nonthreat") + (cot ? "_cot" : "_no_cot");
  auto it = baseline_cache_.find(key);
  if (it == baseline_cache_.end()) {
    MethodSpec baseline;
    baseline.kind = MethodKind::Baseline;
    baseline.cot = cot;
    it = baseline_cache_.emplace(key, collect_nonthreat_cell(baseline)).first;
  }
  return it->second;
}

EvalRunner::PairedSets EvalRunner::pair_cells(const CellData& intervention,
                                              const CellData& reference) const {
  if (intervention.per_scenario.size() != reference.per_scenario.size()) {
    throw Error("comparison cells cover different scenario sets");
  }
  PairedSets out;
  out.total = intervention.per_scenario.size();
  for (std::size_t i = 0; i < intervention.per_scenario.size(); ++i) {
    const auto& a = intervention.per_scenario[i];
    const auto& b = reference.per_scenario[i];
    if (a.scenario_id != b.scenario_id) throw Error("comparison cells are misaligned");
    if (a.dropped || b.dropped) continue;
    out.intervention.push_back(a.to_sample_set(intervention.label()));
    out.baseline.push_back(b.to_sample_set(reference.label()));
  }
  out.valid = out.intervention.size();
  return out;
}

stats::AggregateEstimate EvalRunner::compare_sq_diff(const CellData& intervention,
                                                     const CellData& reference) const {
  PairedSets paired = pair_cells(intervention, reference);
  std::vector<stats::ScenarioEstimate> estimates;
  estimates.reserve(paired.valid);
  for (std::size_t i = 0; i < paired.valid; ++i) {
    estimates.push_back(stats::unbiased_sq_diff(paired.intervention[i], paired.baseline[i]));
  }
  stats::AggregateEstimate agg = stats::aggregate(estimates);
  agg.valid = paired.valid;
  agg.total = paired.total;
  return agg;
}

stats::MeanDiff EvalRunner::compare_mean_diff(const CellData& intervention,
                                              const CellData& reference) const {
  PairedSets paired = pair_cells(intervention, reference);
  stats::MeanDiff diff = stats::mean_diff(paired.intervention, paired.baseline);
  diff.valid = paired.valid;
  diff.total = paired.total;
  return diff;
}

stats::AggregateEstimate EvalRunner::run_primary(const MethodSpec& method) {
  const CellData intervention = collect_threat_cell(method, ThreatKind::Surrogate);
  const CellData& reference = baseline_threat_cell(ThreatKind::Default, method.cot);
  return compare_sq_diff(intervention, reference);
}

stats::AggregateEstimate EvalRunner::run_default_threat_eval(const MethodSpec& method) {
  const CellData intervention = collect_threat_cell(method, ThreatKind::Default);
  const CellData& reference = baseline_threat_cell(ThreatKind::Default, method.cot);
  return compare_sq_diff(intervention, reference);
}

stats::MeanDiff EvalRunner::run_pointless_eval(const MethodSpec& method) {
  const CellData intervention = collect_threat_cell(method, ThreatKind::Pointless);
  const CellData& reference = baseline_threat_cell(ThreatKind::Pointless, method.cot);
  return compare_mean_diff(intervention, reference);
}

stats::AggregateEstimate EvalRunner::run_nonthreat_eval(const MethodSpec& method) {
  const CellData intervention = collect_nonthreat_cell(method);
  const CellData& reference = baseline_nonthreat_cell(method.cot);
  return compare_sq_diff(intervention, reference);
}

PoolHarvest harvest_pool(const CellData& cell, ThreatKind kind) {
  PoolHarvest harvest;
  for (const auto& samples : cell.per_scenario) {
    if (samples.dropped) continue;
    auto& list = harvest.entries[{samples.scenario_id, kind}];
    for (const auto& decision : samples.decisions) {
      if (!decision.valid()) continue;
      list.emplace_back(decision.cot_text.value_or(""), decision.kind);
    }
  }
  return harvest;
}

}  // namespace sg::eval
