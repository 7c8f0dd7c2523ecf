#include <cmath>
#include <random>

#include <doctest.h>

#include "sg/common/rng.hpp"
#include "sg/stats/estimators.hpp"

using sg::stats::SampleSet;

namespace {

SampleSet binary_set(int ones, int zeros, const std::string& id = "s") {
  SampleSet set;
  set.scenario_id = id;
  set.outcomes.assign(static_cast<std::size_t>(ones), 1);
  set.outcomes.insert(set.outcomes.end(), static_cast<std::size_t>(zeros), 0);
  return set;
}

// Exact expectation of z over all binomial outcome pairs. Binary samples make
// z a function of the success counts alone, so the enumeration is exact.
double exact_expected_z(double px, double py, int n) {
  std::vector<double> binom(static_cast<std::size_t>(n) + 1);
  binom[0] = 1.0;
  for (int k = 1; k <= n; ++k) {
    binom[static_cast<std::size_t>(k)] =
        binom[static_cast<std::size_t>(k - 1)] * (n - k + 1) / static_cast<double>(k);
  }
  auto pmf = [&](double p, int k) {
    return binom[static_cast<std::size_t>(k)] * std::pow(p, k) * std::pow(1.0 - p, n - k);
  };
  double expected = 0.0;
  for (int kx = 0; kx <= n; ++kx) {
    for (int ky = 0; ky <= n; ++ky) {
      const auto xs = binary_set(kx, n - kx);
      const auto ys = binary_set(ky, n - ky);
      expected += pmf(px, kx) * pmf(py, ky) * sg::stats::unbiased_sq_diff(xs, ys).z;
    }
  }
  return expected;
}

}  // namespace

TEST_CASE("unbiased_sq_diff worked examples") {
  const auto zeros = binary_set(0, 20);
  const auto ones = binary_set(20, 0);
  CHECK(sg::stats::unbiased_sq_diff(zeros, zeros).z == doctest::Approx(0.0));
  CHECK(sg::stats::unbiased_sq_diff(ones, zeros).z == doctest::Approx(1.0));

  // 10/20 on both sides: (0)^2 - 1/76 - 1/76 = -1/38.
  const auto half = binary_set(10, 10);
  CHECK(sg::stats::unbiased_sq_diff(half, half).z == doctest::Approx(-1.0 / 38.0).epsilon(1e-12));
  CHECK(sg::stats::unbiased_sq_diff(half, half).z < 0.0);
}

TEST_CASE("unbiased_sq_diff supports unequal sample sizes") {
  // Each Var(mean) term uses its own n; check against a hand evaluation.
  const auto xs = binary_set(3, 7);   // n=10, mean 0.3
  const auto ys = binary_set(10, 10); // n=20, mean 0.5
  const double var_x = (3 * 0.49 + 7 * 0.09) / 9.0;
  const double var_y = (10 * 0.25 + 10 * 0.25) / 19.0;
  const double expected = 0.04 - var_x / 10.0 - var_y / 20.0;
  CHECK(sg::stats::unbiased_sq_diff(xs, ys).z == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("unbiased_sq_diff rejects tiny samples") {
  CHECK_THROWS(sg::stats::unbiased_sq_diff(binary_set(1, 0), binary_set(10, 10)));
}

TEST_CASE("estimator is exactly unbiased on a probability grid") {
  // Unit-test-sized grid; the acceptance suite runs the full 11x11 grid.
  for (double px : {0.0, 0.3, 0.5, 1.0}) {
    for (double py : {0.0, 0.2, 0.9}) {
      const double gap = (px - py) * (px - py);
      CHECK(std::abs(exact_expected_z(px, py, 20) - gap) < 1e-12);
    }
  }
}

TEST_CASE("aggregate worked examples") {
  std::vector<sg::stats::ScenarioEstimate> estimates;
  estimates.push_back({0.0, 20, 20, "a"});
  estimates.push_back({1.0, 20, 20, "b"});
  const auto agg = sg::stats::aggregate(estimates);
  CHECK(agg.mean_z == doctest::Approx(0.5));
  CHECK(agg.var_of_mean == doctest::Approx(0.25));
  CHECK(agg.k == 2);

  std::vector<sg::stats::ScenarioEstimate> equal(5, {0.3, 20, 20, "x"});
  const auto agg_equal = sg::stats::aggregate(equal);
  CHECK(agg_equal.mean_z == doctest::Approx(0.3));
  CHECK(agg_equal.var_of_mean == doctest::Approx(0.0));

  CHECK_THROWS(sg::stats::aggregate({{0.1, 20, 20, "only"}}));
}

TEST_CASE("aggregate is permutation invariant and exactly the mean") {
  auto rng = sg::seeded_rng(99);
  std::vector<sg::stats::ScenarioEstimate> estimates;
  double sum = 0.0;
  for (int i = 0; i < 25; ++i) {
    const double z = sg::uniform01(rng) - 0.5;
    estimates.push_back({z, 20, 20, "s" + std::to_string(i)});
    sum += z;
  }
  const auto forward = sg::stats::aggregate(estimates);
  std::shuffle(estimates.begin(), estimates.end(), rng);
  const auto shuffled = sg::stats::aggregate(estimates);
  CHECK(forward.mean_z == doctest::Approx(sum / 25.0).epsilon(1e-12));
  CHECK(forward.mean_z == doctest::Approx(shuffled.mean_z).epsilon(1e-12));
  CHECK(forward.var_of_mean == doctest::Approx(shuffled.var_of_mean).epsilon(1e-12));
}

TEST_CASE("mean_diff worked examples") {
  // Identical cells: zero mean, zero half-width.
  std::vector<SampleSet> xs = {binary_set(4, 16, "a"), binary_set(8, 12, "b")};
  const auto identity = sg::stats::mean_diff(xs, xs);
  CHECK(identity.mean == doctest::Approx(0.0));
  CHECK(identity.ci95_halfwidth == doctest::Approx(0.0));

  // Differences {0.2, 0.2, 0.2}: mean 0.2, zero dispersion.
  std::vector<SampleSet> a = {binary_set(4, 16, "a"), binary_set(8, 12, "b"), binary_set(12, 8, "c")};
  std::vector<SampleSet> b = {binary_set(0, 20, "a"), binary_set(4, 16, "b"), binary_set(8, 12, "c")};
  const auto constant = sg::stats::mean_diff(a, b);
  CHECK(constant.mean == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(constant.ci95_halfwidth == doctest::Approx(0.0).epsilon(1e-12));

  // Differences {0, 0.4}: mean 0.2, half-width 1.96 * SD/sqrt(2) ~ 0.392.
  std::vector<SampleSet> c = {binary_set(0, 20, "a"), binary_set(8, 12, "b")};
  std::vector<SampleSet> d = {binary_set(0, 20, "a"), binary_set(0, 20, "b")};
  const auto spread = sg::stats::mean_diff(c, d);
  CHECK(spread.mean == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(spread.ci95_halfwidth == doctest::Approx(0.392).epsilon(1e-9));
}

TEST_CASE("flip_fraction") {
  using sg::stats::Stance;
  std::map<std::string, Stance> a;
  for (int i = 0; i < 197; ++i) {
    a["st" + std::to_string(i)] = (i % 2 == 0) ? Stance::Agree : Stance::Disagree;
  }
  CHECK(sg::stats::flip_fraction(a, a) == doctest::Approx(0.0));

  auto opposed = a;
  for (auto& [key, stance] : opposed) {
    stance = stance == Stance::Agree ? Stance::Disagree : Stance::Agree;
  }
  CHECK(sg::stats::flip_fraction(a, opposed) == doctest::Approx(1.0));

  auto five_flips = a;
  int flipped = 0;
  for (auto& [key, stance] : five_flips) {
    if (flipped == 5) break;
    stance = stance == Stance::Agree ? Stance::Disagree : Stance::Agree;
    ++flipped;
  }
  CHECK(sg::stats::flip_fraction(a, five_flips) == doctest::Approx(5.0 / 197.0).epsilon(1e-12));

  std::map<std::string, Stance> mismatched = {{"other", Stance::Agree}};
  CHECK_THROWS(sg::stats::flip_fraction(a, mismatched));
}

TEST_CASE("refusal_rate_diff") {
  std::map<std::string, bool> a;
  std::map<std::string, bool> b;
  for (int i = 0; i < 100; ++i) {
    const std::string key = "st" + std::to_string(i);
    a[key] = i < 10;
    b[key] = i < 25;
  }
  CHECK(sg::stats::refusal_rate_diff(a, b) == doctest::Approx(0.15).epsilon(1e-12));
  CHECK(sg::stats::refusal_rate_diff(a, a) == doctest::Approx(0.0));

  std::map<std::string, bool> all = a;
  std::map<std::string, bool> none = a;
  for (auto& [key, refused] : all) refused = true;
  for (auto& [key, refused] : none) refused = false;
  CHECK(sg::stats::refusal_rate_diff(all, none) == doctest::Approx(1.0));
}

TEST_CASE("give_in_histogram partitions the cells") {
  auto rng = sg::seeded_rng(3);
  std::vector<SampleSet> cells;
  for (int i = 0; i < 101; ++i) {
    const int ones = static_cast<int>(rng() % 21);
    cells.push_back(binary_set(ones, 20 - ones, "s" + std::to_string(i)));
  }
  const auto bins = sg::stats::give_in_histogram(cells, 20);
  REQUIRE(bins.size() == 21);
  std::size_t total = 0;
  for (auto count : bins) total += count;
  CHECK(total == cells.size());
}

TEST_CASE("monte carlo consistency near the analytic value") {
  // Small version of the acceptance check: E[z] ~ (0.3-0.7)^2 = 0.16.
  auto rng = sg::seeded_rng(12345);
  const int trials = 20000;
  const int n = 20;
  double sum = 0.0;
  double sum_sq = 0.0;
  for (int t = 0; t < trials; ++t) {
    int kx = 0;
    int ky = 0;
    for (int i = 0; i < n; ++i) {
      kx += sg::uniform01(rng) < 0.3 ? 1 : 0;
      ky += sg::uniform01(rng) < 0.7 ? 1 : 0;
    }
    const double z = sg::stats::unbiased_sq_diff(binary_set(kx, n - kx), binary_set(ky, n - ky)).z;
    sum += z;
    sum_sq += z * z;
  }
  const double mean = sum / trials;
  const double var = (sum_sq - trials * mean * mean) / (trials - 1);
  const double se = std::sqrt(var / trials);
  CHECK(std::abs(mean - 0.16) < 3.0 * se);
}
