#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace sg::stats {

/// Binary outcomes (1 = gave in / took the action) for one (scenario, method,
/// threat-kind) cell.
struct SampleSet {
  std::vector<int> outcomes;
  std::string scenario_id;
  std::string cell_label;

  std::size_t n() const { return outcomes.size(); }
  double mean() const;
  /// Unbiased sample variance (Bessel's correction); requires n >= 2.
  double sample_variance() const;
};

/// One scenario's unbiased estimate of the squared difference in give-in
/// probability. The value can be negative.
struct ScenarioEstimate {
  double z = 0.0;
  std::size_t n_x = 0;
  std::size_t n_y = 0;
  std::string scenario_id;
};

struct AggregateEstimate {
  double mean_z = 0.0;
  double var_of_mean = 0.0;
  std::size_t k = 0;
  std::size_t valid = 0;
  std::size_t total = 0;

  double ci95_halfwidth() const;
};

struct MeanDiff {
  double mean = 0.0;
  double ci95_halfwidth = 0.0;
  std::size_t k = 0;
  std::size_t valid = 0;
  std::size_t total = 0;
};

/// z = (X̄ − Ȳ)² − Var̂(X̄) − Var̂(Ȳ), where each Var̂(mean) term is the
/// Bessel-corrected sample variance divided by its own sample size. Unbiased
/// for (E[X] − E[Y])²; requires at least two samples on each side.
ScenarioEstimate unbiased_sq_diff(const SampleSet& xs, const SampleSet& ys);

/// Mean of the per-scenario estimates plus the blackbox variance-of-mean
/// 1/(k(k−1)) Σ (Z_j − Z̄)². Requires k >= 2.
AggregateEstimate aggregate(const std::vector<ScenarioEstimate>& estimates);

/// Average of per-scenario differences of sample means, with a 95% interval
/// half-width of 1.96 · SD(differences) / sqrt(k). Inputs are paired by index.
MeanDiff mean_diff(const std::vector<SampleSet>& xs, const std::vector<SampleSet>& ys);

enum class Stance { Agree, Disagree };

/// Fraction of statements on which the two response maps disagree.
/// Throws on key mismatch.
double flip_fraction(const std::map<std::string, Stance>& a, const std::map<std::string, Stance>& b);

/// Absolute difference between the refusal rates of two response sets, where
/// each set maps statement -> whether the response was a refusal.
double refusal_rate_diff(const std::map<std::string, bool>& a, const std::map<std::string, bool>& b);

/// 21-bin histogram of give-in counts ("0 out of n" .. "n out of n").
std::vector<std::size_t> give_in_histogram(const std::vector<SampleSet>& cells, std::size_t n_samples);

}  // namespace sg::stats
