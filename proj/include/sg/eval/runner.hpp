#pragma once

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "sg/backend/chat.hpp"
#include "sg/backend/sampling.hpp"
#include "sg/interventions/method.hpp"
#include "sg/interventions/pipeline.hpp"
#include "sg/prompts/library.hpp"
#include "sg/scenario/types.hpp"
#include "sg/stats/estimators.hpp"

namespace sg::eval {

/// Sampled decisions for one scenario in one cell. Outcome 1 means the model
/// gave in (threat cells) or took the burn-preventing action (non-threat
/// cells).
struct ScenarioSamples {
  std::string scenario_id;
  std::vector<interventions::Decision> decisions;
  bool dropped = false;
  bool flagged = false;  // e.g. persistent translation fallback

  std::size_t give_in_count() const;
  stats::SampleSet to_sample_set(const std::string& cell_label) const;
};

struct CellData {
  std::string model_id;
  std::string method_label;
  std::string cell_class;  // "threat_default", "threat_surrogate", "threat_pointless", "nonthreat"
  std::vector<ScenarioSamples> per_scenario;

  std::string label() const { return model_id + "/" + method_label + "/" + cell_class; }
  std::size_t valid_count() const;
  std::size_t total_count() const { return per_scenario.size(); }
};

/// Thread-safe sink for raw completion audit records.
class CompletionLog {
 public:
  struct Entry {
    std::uint64_t request_hash = 0;
    std::string request_bytes;
    std::string response;
    std::string classification;
  };

  void append(Entry entry);
  std::vector<Entry> snapshot() const;

 private:
  mutable std::mutex mutex_;
  std::vector<Entry> entries_;
};

struct EvalContext {
  const scenario::Dataset* dataset = nullptr;
  const prompts::Library* prompts = nullptr;
  backend::ChatBackend* backend = nullptr;
  backend::SamplingPolicy policy;
  interventions::RequestDefaults defaults;
  int max_in_flight = 4;
  /// Benchmarks and persona prompts run at this temperature.
  double deterministic_temperature = 0.0;
  CompletionLog* log = nullptr;
};

/// Orchestrates the evaluations for one model. Baseline reference cells are
/// computed once and shared across comparisons, so cross-method error
/// estimates are correlated by construction; intervention cells are sampled
/// fresh per call.
class EvalRunner {
 public:
  explicit EvalRunner(EvalContext ctx);

  /// E_S[(p^{sg,sg} − p^{0,0})²]: intervention on the surrogate threat versus
  /// the baseline on the default threat.
  stats::AggregateEstimate run_primary(const interventions::MethodSpec& method);

  /// E_S[(p^{sg,0} − p^{0,0})²]: drift on default threats.
  stats::AggregateEstimate run_default_threat_eval(const interventions::MethodSpec& method);

  /// Linear statistic on pointless threats; positive = more giving in = worse.
  stats::MeanDiff run_pointless_eval(const interventions::MethodSpec& method);

  /// Squared-difference statistic on the non-threat dataset (action = the
  /// scenario's burn-preventing action).
  stats::AggregateEstimate run_nonthreat_eval(const interventions::MethodSpec& method);

  CellData collect_threat_cell(const interventions::MethodSpec& method, scenario::ThreatKind kind);
  CellData collect_nonthreat_cell(const interventions::MethodSpec& method);

  /// Cached baseline reference cell (Baseline method with the given cot flag).
  const CellData& baseline_threat_cell(scenario::ThreatKind kind, bool cot);
  const CellData& baseline_nonthreat_cell(bool cot);

  /// Statistics over already-collected cells (scenarios dropped on either
  /// side are excluded and reported through valid/total).
  stats::AggregateEstimate compare_sq_diff(const CellData& intervention, const CellData& reference) const;
  stats::MeanDiff compare_mean_diff(const CellData& intervention, const CellData& reference) const;

  const EvalContext& context() const { return ctx_; }

 private:
  struct PairedSets {
    std::vector<stats::SampleSet> intervention;
    std::vector<stats::SampleSet> baseline;
    std::size_t valid = 0;
    std::size_t total = 0;
  };

  PairedSets pair_cells(const CellData& intervention, const CellData& reference) const;

  EvalContext ctx_;
  std::map<std::string, CellData> baseline_cache_;
};

/// Builds the chat request for a non-threat task under a single-request
/// method (three-step goes through the pipeline instead).
backend::ChatRequest build_nonthreat_request(const interventions::MethodSpec& method,
                                             const std::string& scenario_text,
                                             const prompts::Library& prompts,
                                             const interventions::RequestDefaults& defaults);

/// Fine-tune response pools are harvested from threat cells: each valid
/// decision keeps its chain of thought.
struct PoolHarvest {
  std::map<std::pair<std::string, scenario::ThreatKind>, std::vector<std::pair<std::string, interventions::DecisionKind>>>
      entries;
};

PoolHarvest harvest_pool(const CellData& cell, scenario::ThreatKind kind);

}  // namespace sg::eval
