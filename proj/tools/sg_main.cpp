// Command-line entry point: validate datasets, render scenarios, execute
// runs, emit fine-tuning files, drive the generation pipeline, and assemble
// reports.
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sg/backend/mock_backend.hpp"
#include "sg/common/errors.hpp"
#include "sg/common/jsonio.hpp"
#include "sg/common/rng.hpp"
#include "sg/config/run_config.hpp"
#include "sg/eval/run_executor.hpp"
#include "sg/eval/runner.hpp"
#include "sg/ftdata/builder.hpp"
#include "sg/gen/pipeline.hpp"
#include "sg/interventions/pipeline.hpp"
#include "sg/prompts/library.hpp"
#include "sg/report/report.hpp"
#include "sg/scenario/dataset.hpp"
#include "sg/scenario/render.hpp"

namespace {

using sg::scenario::Dataset;
using sg::scenario::ThreatKind;

int cmd_validate(const std::string& dataset_path) {
  try {
    const Dataset dataset = sg::scenario::load_dataset(dataset_path);
    std::cout << "ok: " << dataset.scenarios.size() << " threat scenarios, "
              << dataset.non_threat.size() << " non-threat scenarios\n";
    return 0;
  } catch (const sg::SchemaError& ex) {
    std::cerr << "validation failed: " << ex.what() << "\n";
    for (const auto& violation : ex.violations()) std::cerr << "  - " << violation.str() << "\n";
    return 1;
  }
}

int cmd_render(const std::string& dataset_path, const std::string& id, const std::string& kind_name,
               const std::vector<std::string>& param_overrides) {
  const Dataset dataset = sg::scenario::load_dataset(dataset_path);
  const auto* scenario = dataset.find(id);
  if (scenario == nullptr) {
    std::cerr << "no scenario with id '" << id << "'\n";
    return 1;
  }
  auto params = sg::scenario::default_params(*scenario);
  for (const auto& override_text : param_overrides) {
    const auto eq = override_text.find('=');
    if (eq == std::string::npos) {
      std::cerr << "bad --param (expected NAME=VALUE): " << override_text << "\n";
      return 1;
    }
    params[override_text.substr(0, eq)] = std::stod(override_text.substr(eq + 1));
  }
  std::cout << sg::scenario::render(*scenario, sg::scenario::threat_kind_from_string(kind_name),
                                    params)
            << "\n";
  return 0;
}

std::unique_ptr<sg::backend::MockBackend> mock_from_config(const sg::config::RunConfig& config,
                                                           const Dataset& dataset,
                                                           const sg::prompts::Library& prompts) {
  sg::backend::MockBehavior behavior;
  if (config.backend.mock_behavior) {
    behavior = sg::backend::mock_behavior_from_json(sg::read_json_file(*config.backend.mock_behavior));
  } else {
    behavior.derive_per_scenario = true;
    behavior.rng_seed = config.seed;
  }
  auto mock = std::make_unique<sg::backend::MockBackend>(std::move(behavior));
  mock->register_dataset(dataset);
  mock->adopt_prompt_markers(prompts);
  return mock;
}

int cmd_ftdata(const std::string& config_path, const std::string& variant_name,
               std::uint64_t split_seed, std::size_t n_train, const std::string& strong_model,
               const std::string& out_dir, bool translation_only, bool literal_balance) {
  const auto config = sg::config::load_run_config(config_path);
  const Dataset dataset = sg::scenario::load_dataset(config.dataset);
  const auto prompts = sg::prompts::Library::load(config.prompts_dir);

  sg::interventions::RequestDefaults defaults;
  defaults.model_id = config.models.front();
  defaults.temperature = config.temperature;
  defaults.max_tokens = config.max_tokens;

  const std::filesystem::path out(out_dir);
  std::filesystem::create_directories(out);

  if (translation_only) {
    const auto split = sg::scenario::split(dataset, split_seed, n_train);
    const auto pairs = sg::ftdata::build_translation_dataset(split.train, prompts, defaults);
    sg::ftdata::emit_translation_jsonl(pairs, out / "translation_train.jsonl");
    sg::write_json_file(out / "translation_manifest.json",
                        {{"kind", "translation"},
                         {"split_seed", split_seed},
                         {"n_train", n_train},
                         {"hyperparameters", {{"epochs", 1}, {"batch_size", 2}}},
                         {"counts", {{"pairs", pairs.size()}}}});
    std::cout << "wrote " << pairs.size() << " translation pairs\n";
    return 0;
  }

  const auto variant = sg::interventions::ft_variant_from_string(variant_name);

  // Collect the response pools the variant needs by sampling the backend.
  std::unique_ptr<sg::backend::ChatBackend> backend;
  std::unique_ptr<sg::backend::MockBackend> mock;
  if (config.backend.type == sg::config::BackendChoice::Type::Mock) {
    mock = mock_from_config(config, dataset, prompts);
    backend = nullptr;
  }
  sg::eval::EvalContext ctx;
  ctx.dataset = &dataset;
  ctx.prompts = &prompts;
  ctx.backend = mock ? mock.get() : backend.get();
  if (ctx.backend == nullptr) {
    std::cerr << "ftdata collection currently requires the mock backend in config\n";
    return 1;
  }
  ctx.policy = config.policy;
  ctx.defaults = defaults;
  ctx.max_in_flight = config.max_in_flight;

  const auto split = sg::scenario::split(dataset, split_seed, n_train);
  Dataset train_only = split.train;

  auto harvest_into = [&](sg::ftdata::ResponsePool& pool, const sg::eval::CellData& cell,
                          ThreatKind kind) {
    const auto harvest = sg::eval::harvest_pool(cell, kind);
    for (const auto& [key, entries] : harvest.entries) {
      auto& list = pool.entries[key];
      for (const auto& [cot, decision] : entries) list.push_back({cot, decision});
    }
  };

  sg::eval::EvalContext train_ctx = ctx;
  train_ctx.dataset = &train_only;

  sg::interventions::MethodSpec baseline;
  baseline.kind = sg::interventions::MethodKind::Baseline;
  baseline.cot = true;

  // Self-model pool: the run model answering the threat task with CoT.
  sg::eval::EvalRunner self_runner(train_ctx);
  sg::ftdata::ResponsePool self_pool;
  self_pool.source_tag = sg::ftdata::SourceTag::SelfModel;
  sg::ftdata::TargetDistribution targets;
  {
    const auto default_cell = self_runner.collect_threat_cell(baseline, ThreatKind::Default);
    harvest_into(self_pool, default_cell, ThreatKind::Default);
    for (const auto& samples : default_cell.per_scenario) {
      if (samples.dropped) continue;
      targets[samples.scenario_id] =
          static_cast<double>(samples.give_in_count()) / static_cast<double>(samples.decisions.size());
    }
    harvest_into(self_pool, self_runner.collect_threat_cell(baseline, ThreatKind::Pointless),
                 ThreatKind::Pointless);
  }

  // Strong-model pools, when a distinct strong model is named.
  std::vector<sg::ftdata::ResponsePool> pools = {self_pool};
  if (!strong_model.empty()) {
    sg::eval::EvalContext strong_ctx = train_ctx;
    strong_ctx.defaults.model_id = strong_model;
    sg::eval::EvalRunner strong_runner(strong_ctx);
    sg::ftdata::ResponsePool strong_pool;
    strong_pool.source_tag = sg::ftdata::SourceTag::StrongModel;
    harvest_into(strong_pool, strong_runner.collect_threat_cell(baseline, ThreatKind::Default),
                 ThreatKind::Default);
    harvest_into(strong_pool, strong_runner.collect_threat_cell(baseline, ThreatKind::Pointless),
                 ThreatKind::Pointless);
    pools.push_back(strong_pool);

    sg::interventions::MethodSpec sg_prompted;
    sg_prompted.kind = sg::interventions::MethodKind::SimplePrompt;
    sg_prompted.cot = true;
    sg::ftdata::ResponsePool sg_pool;
    sg_pool.source_tag = sg::ftdata::SourceTag::StrongModelSgPrompted;
    harvest_into(sg_pool, strong_runner.collect_threat_cell(sg_prompted, ThreatKind::Surrogate),
                 ThreatKind::Surrogate);
    pools.push_back(sg_pool);
  }

  sg::ftdata::BuildOptions options;
  options.seed = split_seed;
  options.literal_balance_formula = literal_balance;
  options.defaults = defaults;

  const auto records = sg::ftdata::build_e2e_dataset(variant, train_only, pools, targets, prompts, options);
  sg::ftdata::emit_jsonl(records, out / ("e2e_" + variant_name + "_train.jsonl"));
  std::vector<sg::ftdata::SourceTag> tags;
  for (const auto& pool : pools) tags.push_back(pool.source_tag);
  sg::write_json_file(out / ("e2e_" + variant_name + "_manifest.json"),
                      sg::ftdata::training_manifest(variant, split_seed, tags, records.size()));
  std::cout << "wrote " << records.size() << " fine-tune records\n";
  return 0;
}

int cmd_gen(const std::string& config_path, const std::string& mode, int target_count,
            const std::string& out_path) {
  const auto config = sg::config::load_run_config(config_path);
  const Dataset dataset = sg::scenario::load_dataset(config.dataset);
  const auto prompts = sg::prompts::Library::load(config.prompts_dir);
  auto mock = mock_from_config(config, dataset, prompts);

  sg::gen::GenContext ctx;
  ctx.backend = mock.get();
  ctx.prompts = &prompts;
  ctx.defaults.model_id = config.models.front();
  ctx.defaults.temperature = config.temperature;
  ctx.defaults.max_tokens = config.max_tokens;
  ctx.checker_retries = config.policy.invalid_retries;

  if (mode == "threats") {
    sg::gen::GenerationSpec spec;
    spec.target_count = target_count;
    const auto result = sg::gen::generate_threat_candidates(ctx, spec, dataset);
    sg::gen::emit_review_queue(result.candidates, out_path);
    std::cout << "wrote " << result.candidates.size() << " candidates ("
              << result.rejections.size() << " rejected) to " << out_path << "\n";
    return 0;
  }
  if (mode == "nonthreat") {
    const auto result = sg::gen::generate_nonthreat_candidates(
        ctx, sg::scenario::Intent::Intentional, target_count, dataset);
    const auto filtered = sg::gen::filter_candidates(ctx, result.candidates);
    nlohmann::json lines = nlohmann::json::array();
    for (const auto& candidate : filtered.kept) {
      lines.push_back(sg::scenario::to_json(candidate.scenario));
    }
    sg::write_json_file(out_path, lines);
    std::cout << "kept " << filtered.kept.size() << " of " << result.candidates.size()
              << " generated candidates\n";
    return 0;
  }
  std::cerr << "unknown gen mode '" << mode << "' (expected threats|nonthreat)\n";
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Surrogate-goal evaluation harness"};
  app.require_subcommand(1);

  std::string dataset_path;
  auto* validate = app.add_subcommand("validate", "Validate a dataset file against the schema");
  validate->add_option("--dataset", dataset_path, "Dataset JSON file")->required();

  std::string render_id;
  std::string render_kind = "default";
  std::vector<std::string> render_params;
  auto* render = app.add_subcommand("render", "Render one scenario variant to stdout");
  render->add_option("--dataset", dataset_path, "Dataset JSON file")->required();
  render->add_option("--id", render_id, "Scenario id")->required();
  render->add_option("--kind", render_kind, "default|surrogate|pointless");
  render->add_option("--param", render_params, "NAME=VALUE numeric override (repeatable)");

  std::string config_path;
  auto* run = app.add_subcommand("run", "Execute the evaluations described by a run config");
  run->add_option("--config", config_path, "Run config JSON file")->required();

  std::string ft_variant = "A";
  std::uint64_t ft_seed = 7;
  std::size_t ft_n_train = 69;
  std::string ft_strong_model;
  std::string ft_out = "ftdata_out";
  bool ft_translation = false;
  bool ft_literal = false;
  auto* ftdata = app.add_subcommand("ftdata", "Emit fine-tuning training files");
  ftdata->add_option("--config", config_path, "Run config JSON file")->required();
  ftdata->add_option("--variant", ft_variant, "A|B|C|D");
  ftdata->add_option("--split-seed", ft_seed, "Train/test split seed");
  ftdata->add_option("--n-train", ft_n_train, "Training scenario count");
  ftdata->add_option("--strong-model", ft_strong_model, "Stronger model id for variants B/C/D");
  ftdata->add_option("--out", ft_out, "Output directory");
  ftdata->add_flag("--translation", ft_translation, "Emit the translation dataset instead");
  ftdata->add_flag("--literal-balance-formula", ft_literal,
                   "Use the published balancing formula verbatim");

  std::string gen_mode = "threats";
  int gen_count = 5;
  std::string gen_out = "review_queue.jsonl";
  auto* gen = app.add_subcommand("gen", "Run the scenario generation pipeline");
  gen->add_option("--config", config_path, "Run config JSON file")->required();
  gen->add_option("--mode", gen_mode, "threats|nonthreat");
  gen->add_option("--count", gen_count, "Target candidate count");
  gen->add_option("--out", gen_out, "Output file");

  std::string run_dir;
  std::string report_out = "report_out";
  auto* report = app.add_subcommand("report", "Assemble tables from a run directory");
  report->add_option("--run", run_dir, "Run directory")->required();
  report->add_option("--out", report_out, "Report output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (validate->parsed()) return cmd_validate(dataset_path);
    if (render->parsed()) return cmd_render(dataset_path, render_id, render_kind, render_params);
    if (run->parsed()) {
      const auto config = sg::config::load_run_config(config_path);
      const auto out = sg::eval::execute_run(config);
      std::cout << "run complete: " << out.string() << "\n";
      return 0;
    }
    if (ftdata->parsed()) {
      return cmd_ftdata(config_path, ft_variant, ft_seed, ft_n_train, ft_strong_model, ft_out,
                        ft_translation, ft_literal);
    }
    if (gen->parsed()) return cmd_gen(config_path, gen_mode, gen_count, gen_out);
    if (report->parsed()) {
      const auto output = sg::report::emit_report(run_dir, report_out);
      for (const auto& warning : output.warnings) std::cerr << "warning: " << warning << "\n";
      std::cout << "report written to " << report_out << " (" << output.cells.size()
                << " cells)\n";
      return 0;
    }
  } catch (const sg::ConfigError& ex) {
    std::cerr << "config error: " << ex.what() << "\n";
    return 2;
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 1;
  }
  return 0;
}
