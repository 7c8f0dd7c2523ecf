#include "sg/eval/run_executor.hpp"

#include <fstream>
#include <memory>

#include "sg/backend/http_backend.hpp"
#include "sg/backend/mock_backend.hpp"
#include "sg/common/errors.hpp"
#include "sg/common/jsonio.hpp"
#include "sg/eval/benchmark.hpp"
#include "sg/eval/persona.hpp"
#include "sg/eval/runner.hpp"
#include "sg/scenario/dataset.hpp"

namespace sg::eval {

namespace {

using nlohmann::json;

json cell_to_json(const CellData& cell) {
  json scenarios = json::array();
  for (const auto& s : cell.per_scenario) {
    json outcomes = json::array();
    for (const auto& d : s.decisions) {
      outcomes.push_back(d.kind == interventions::DecisionKind::GiveIn ? 1 : 0);
    }
    scenarios.push_back({{"id", s.scenario_id},
                         {"outcomes", std::move(outcomes)},
                         {"dropped", s.dropped},
                         {"flagged", s.flagged}});
  }
  return json{{"model", cell.model_id},
              {"method", cell.method_label},
              {"cell_class", cell.cell_class},
              {"per_scenario", std::move(scenarios)}};
}

std::string sanitized(const std::string& name) {
  std::string out = name;
  for (char& c : out) {
    if (c == '/' || c == ' ') c = '_';
  }
  return out;
}

json sq_comparison_json(const std::string& name, const std::string& model,
                        const std::string& method_label, const stats::AggregateEstimate& agg) {
  return json{{"comparison", name},
              {"model", model},
              {"method", method_label},
              {"statistic", "sq_diff"},
              {"mean", agg.mean_z},
              {"var_of_mean", agg.var_of_mean},
              {"ci95_halfwidth", agg.ci95_halfwidth()},
              {"valid", agg.valid},
              {"total", agg.total}};
}

json mean_comparison_json(const std::string& name, const std::string& model,
                          const std::string& method_label, const stats::MeanDiff& diff) {
  return json{{"comparison", name},
              {"model", model},
              {"method", method_label},
              {"statistic", "mean_diff"},
              {"mean", diff.mean},
              {"ci95_halfwidth", diff.ci95_halfwidth},
              {"valid", diff.valid},
              {"total", diff.total}};
}

std::unique_ptr<backend::ChatBackend> make_backend(const config::RunConfig& config,
                                                   const scenario::Dataset& dataset,
                                                   const prompts::Library& prompts) {
  if (config.backend.type == config::BackendChoice::Type::Http) {
    backend::HttpBackendConfig http;
    http.base_url = config.backend.base_url;
    http.api_key_env = config.backend.api_key_env;
    return std::make_unique<backend::HttpBackend>(http);
  }
  backend::MockBehavior behavior;
  if (config.backend.mock_behavior) {
    behavior = backend::mock_behavior_from_json(read_json_file(*config.backend.mock_behavior));
  } else {
    behavior.derive_per_scenario = true;
    behavior.rng_seed = config.seed;
  }
  auto mock = std::make_unique<backend::MockBackend>(std::move(behavior));
  mock->register_dataset(dataset);
  mock->adopt_prompt_markers(prompts);
  return mock;
}

}  // namespace

std::filesystem::path execute_run(const config::RunConfig& config) {
  const auto out_dir = config.output_dir;
  std::filesystem::create_directories(out_dir / "cells");
  std::filesystem::create_directories(out_dir / "comparisons");
  write_json_file(out_dir / "run_config.json", config::to_json(config));

  const scenario::Dataset dataset = scenario::load_dataset(config.dataset);
  const prompts::Library prompt_lib = prompts::Library::load(config.prompts_dir);
  auto chat_backend = make_backend(config, dataset, prompt_lib);
  CompletionLog log;

  const bool want_primary =
      std::count(config.evaluations.begin(), config.evaluations.end(), "primary") > 0;
  const bool want_default =
      std::count(config.evaluations.begin(), config.evaluations.end(), "default_threat") > 0;
  const bool want_pointless =
      std::count(config.evaluations.begin(), config.evaluations.end(), "pointless") > 0;
  const bool want_nonthreat =
      std::count(config.evaluations.begin(), config.evaluations.end(), "nonthreat") > 0;

  for (const auto& model : config.models) {
    EvalContext ctx;
    ctx.dataset = &dataset;
    ctx.prompts = &prompt_lib;
    ctx.backend = chat_backend.get();
    ctx.policy = config.policy;
    ctx.defaults.model_id = model;
    ctx.defaults.temperature = config.temperature;
    ctx.defaults.max_tokens = config.max_tokens;
    ctx.max_in_flight = config.max_in_flight;
    ctx.log = &log;
    EvalRunner runner(ctx);

    for (const auto& method_config : config.methods) {
      const auto& method = method_config.spec;
      EvalRunner* active = &runner;
      // Methods bound to their own model (fine-tuned ids) run in a dedicated
      // context; their baseline reference still comes from the run model, so
      // build a runner that shares the same backend and dataset.
      std::unique_ptr<EvalRunner> override_runner;
      if (method_config.model && *method_config.model != model) {
        EvalContext override_ctx = ctx;
        override_ctx.defaults.model_id = *method_config.model;
        if (method_config.translator_model) {
          override_ctx.defaults.translator_model_id = *method_config.translator_model;
        }
        override_runner = std::make_unique<EvalRunner>(override_ctx);
        active = override_runner.get();
      }

      const std::string method_label = method.label();
      const std::string cell_prefix = sanitized(model) + "__" + sanitized(method_label);

      auto persist_sq = [&](const std::string& name, const stats::AggregateEstimate& agg) {
        write_json_file(out_dir / "comparisons" / (cell_prefix + "__" + name + ".json"),
                        sq_comparison_json(name, model, method_label, agg));
      };

      if (want_primary) {
        const CellData cell = active->collect_threat_cell(method, scenario::ThreatKind::Surrogate);
        write_json_file(out_dir / "cells" / (cell_prefix + "__threat_surrogate.json"),
                        cell_to_json(cell));
        const CellData& reference = active->baseline_threat_cell(scenario::ThreatKind::Default, method.cot);
        write_json_file(out_dir / "cells" /
                            (sanitized(model) + "__baseline__threat_default" +
                             (method.cot ? std::string("_cot") : std::string("_no_cot")) + ".json"),
                        cell_to_json(reference));
        persist_sq("primary", active->compare_sq_diff(cell, reference));
      }
      if (want_default) {
        const CellData cell = active->collect_threat_cell(method, scenario::ThreatKind::Default);
        write_json_file(out_dir / "cells" / (cell_prefix + "__threat_default.json"), cell_to_json(cell));
        persist_sq("default_threat",
                   active->compare_sq_diff(
                       cell, active->baseline_threat_cell(scenario::ThreatKind::Default, method.cot)));
      }
      if (want_pointless) {
        const CellData cell = active->collect_threat_cell(method, scenario::ThreatKind::Pointless);
        write_json_file(out_dir / "cells" / (cell_prefix + "__threat_pointless.json"),
                        cell_to_json(cell));
        const CellData& reference =
            active->baseline_threat_cell(scenario::ThreatKind::Pointless, method.cot);
        const stats::MeanDiff diff = active->compare_mean_diff(cell, reference);
        write_json_file(out_dir / "comparisons" / (cell_prefix + "__pointless.json"),
                        mean_comparison_json("pointless", model, method_label, diff));
      }
      if (want_nonthreat && !dataset.non_threat.empty()) {
        const CellData cell = active->collect_nonthreat_cell(method);
        write_json_file(out_dir / "cells" / (cell_prefix + "__nonthreat.json"), cell_to_json(cell));
        persist_sq("nonthreat",
                   active->compare_sq_diff(cell, active->baseline_nonthreat_cell(method.cot)));
      }
      for (const auto& bench : config.benchmarks) {
        const BenchmarkAdapter adapter = BenchmarkAdapter::load_jsonl(bench.path, bench.name);
        const BenchmarkResult result = run_benchmark(adapter, method, active->context());
        write_json_file(out_dir / "comparisons" / (cell_prefix + "__benchmark_" +
                                                   sanitized(bench.name) + ".json"),
                        json{{"comparison", "benchmark_" + bench.name},
                             {"model", model},
                             {"method", method_label},
                             {"statistic", "score_delta"},
                             {"mean", result.delta},
                             {"score_method", result.score_method},
                             {"score_baseline", result.score_baseline},
                             {"valid", result.question_count},
                             {"total", result.question_count}});
      }
    }

    if (config.personas_dir) {
      std::vector<interventions::MethodSpec> persona_methods;
      for (const auto& m : config.methods) {
        if (m.spec.kind != interventions::MethodKind::Baseline) persona_methods.push_back(m.spec);
      }
      if (!persona_methods.empty()) {
        const auto personas = load_personas(*config.personas_dir);
        const PersonaEvalResult result = run_persona_eval(personas, persona_methods, ctx);
        json usable = json::object();
        for (const auto& [persona, count] : result.usable_per_persona) usable[persona] = count;
        json flips = json::object();
        for (const auto& [label, value] : result.flip_fraction) flips[label] = value;
        json refusals = json::object();
        for (const auto& [label, value] : result.refusal_rate_diff) refusals[label] = value;
        write_json_file(out_dir / "comparisons" / (sanitized(model) + "__personas.json"),
                        json{{"comparison", "personas"},
                             {"model", model},
                             {"statistic", "flip_fraction"},
                             {"flip_fraction", std::move(flips)},
                             {"refusal_rate_diff", std::move(refusals)},
                             {"usable_per_persona", std::move(usable)},
                             {"valid", result.usable_total},
                             {"total", result.posed_total}});
      }
    }
  }

  std::ofstream completions(out_dir / "completions.jsonl", std::ios::binary);
  for (const auto& entry : log.snapshot()) {
    completions << json{{"request_hash", entry.request_hash},
                        {"request", entry.request_bytes},
                        {"response", entry.response},
                        {"classification", entry.classification}}
                       .dump()
                << '\n';
  }
  return out_dir;
}

}  // namespace sg::eval
