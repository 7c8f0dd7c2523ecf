#include "sg/stats/estimators.hpp"

#include <cmath>

#include "sg/common/errors.hpp"

namespace sg::stats {

double SampleSet::mean() const {
  if (outcomes.empty()) return 0.0;
  double sum = 0.0;
  for (int v : outcomes) sum += v;
  return sum / static_cast<double>(outcomes.size());
}

double SampleSet::sample_variance() const {
  if (outcomes.size() < 2) throw Error("sample_variance requires n >= 2");
  const double m = mean();
  double ss = 0.0;
  for (int v : outcomes) {
    const double d = v - m;
    ss += d * d;
  }
  return ss / static_cast<double>(outcomes.size() - 1);
}

ScenarioEstimate unbiased_sq_diff(const SampleSet& xs, const SampleSet& ys) {
  if (xs.n() < 2 || ys.n() < 2) throw Error("unbiased_sq_diff requires at least 2 samples per side");
  const double dx = xs.mean() - ys.mean();
  const double var_mean_x = xs.sample_variance() / static_cast<double>(xs.n());
  const double var_mean_y = ys.sample_variance() / static_cast<double>(ys.n());
  ScenarioEstimate est;
  est.z = dx * dx - var_mean_x - var_mean_y;
  est.n_x = xs.n();
  est.n_y = ys.n();
  est.scenario_id = xs.scenario_id.empty() ? ys.scenario_id : xs.scenario_id;
  return est;
}

double AggregateEstimate::ci95_halfwidth() const { return 1.96 * std::sqrt(var_of_mean); }

AggregateEstimate aggregate(const std::vector<ScenarioEstimate>& estimates) {
  const std::size_t k = estimates.size();
  if (k < 2) throw Error("aggregate requires at least 2 scenario estimates");
  double sum = 0.0;
  for (const auto& e : estimates) sum += e.z;
  const double mean = sum / static_cast<double>(k);
  double ss = 0.0;
  for (const auto& e : estimates) {
    const double d = e.z - mean;
    ss += d * d;
  }
  AggregateEstimate agg;
  agg.mean_z = mean;
  agg.var_of_mean = ss / static_cast<double>(k * (k - 1));
  agg.k = k;
  agg.valid = k;
  agg.total = k;
  return agg;
}

MeanDiff mean_diff(const std::vector<SampleSet>& xs, const std::vector<SampleSet>& ys) {
  if (xs.size() != ys.size()) throw Error("mean_diff: paired inputs differ in length");
  const std::size_t k = xs.size();
  if (k < 2) throw Error("mean_diff requires at least 2 scenarios");
  std::vector<double> diffs(k);
  double sum = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    diffs[i] = xs[i].mean() - ys[i].mean();
    sum += diffs[i];
  }
  const double mean = sum / static_cast<double>(k);
  double ss = 0.0;
  for (double d : diffs) ss += (d - mean) * (d - mean);
  const double sd = std::sqrt(ss / static_cast<double>(k - 1));
  MeanDiff out;
  out.mean = mean;
  out.ci95_halfwidth = 1.96 * sd / std::sqrt(static_cast<double>(k));
  out.k = k;
  out.valid = k;
  out.total = k;
  return out;
}

double flip_fraction(const std::map<std::string, Stance>& a, const std::map<std::string, Stance>& b) {
  if (a.size() != b.size()) throw Error("flip_fraction: key sets differ in size");
  if (a.empty()) throw Error("flip_fraction: empty statement set");
  std::size_t flips = 0;
  for (const auto& [key, stance] : a) {
    auto it = b.find(key);
    if (it == b.end()) throw Error("flip_fraction: key missing from second map: " + key);
    if (it->second != stance) ++flips;
  }
  return static_cast<double>(flips) / static_cast<double>(a.size());
}

double refusal_rate_diff(const std::map<std::string, bool>& a, const std::map<std::string, bool>& b) {
  if (a.size() != b.size()) throw Error("refusal_rate_diff: key sets differ in size");
  if (a.empty()) throw Error("refusal_rate_diff: empty statement set");
  std::size_t ra = 0;
  std::size_t rb = 0;
  for (const auto& [key, refused] : a) {
    auto it = b.find(key);
    if (it == b.end()) throw Error("refusal_rate_diff: key missing from second map: " + key);
    if (refused) ++ra;
    if (it->second) ++rb;
  }
  const double n = static_cast<double>(a.size());
  return std::abs(static_cast<double>(ra) / n - static_cast<double>(rb) / n);
}

std::vector<std::size_t> give_in_histogram(const std::vector<SampleSet>& cells, std::size_t n_samples) {
  std::vector<std::size_t> bins(n_samples + 1, 0);
  for (const auto& cell : cells) {
    std::size_t count = 0;
    for (int v : cell.outcomes) count += (v != 0);
    if (count >= bins.size()) throw Error("give_in_histogram: count exceeds bin range");
    ++bins[count];
  }
  return bins;
}

}  // namespace sg::stats
