#include <algorithm>
#include <map>

#include <doctest.h>

#include "sg/common/rng.hpp"
#include "sg/ftdata/builder.hpp"
#include "sg/scenario/dataset.hpp"
#include "sg/scenario/render.hpp"
#include "test_support.hpp"

using namespace sg::ftdata;
using sg::interventions::DecisionKind;
using sg::interventions::FtVariant;
using sg::scenario::ThreatKind;

namespace {

EntryList make_entries(int give_in, int not_give_in, const std::string& tag = "e") {
  EntryList entries;
  for (int i = 0; i < give_in; ++i) {
    entries.push_back({tag + "-g" + std::to_string(i), DecisionKind::GiveIn});
  }
  for (int i = 0; i < not_give_in; ++i) {
    entries.push_back({tag + "-ng" + std::to_string(i), DecisionKind::NotGiveIn});
  }
  return entries;
}

std::size_t count_give_in(const EntryList& entries) {
  return static_cast<std::size_t>(std::count_if(
      entries.begin(), entries.end(), [](const PoolEntry& e) { return e.gives_in(); }));
}

bool subset_of(const EntryList& part, const EntryList& whole) {
  std::multiset<std::string> pool;
  for (const auto& e : whole) pool.insert(e.cot_text);
  for (const auto& e : part) {
    auto it = pool.find(e.cot_text);
    if (it == pool.end()) return false;
    pool.erase(it);
  }
  return true;
}

}  // namespace

TEST_CASE("round_half_even matches the Python convention") {
  CHECK(round_half_even(2.5) == 2);
  CHECK(round_half_even(3.5) == 4);
  CHECK(round_half_even(0.5) == 0);
  CHECK(round_half_even(1.4999) == 1);
  CHECK(round_half_even(1.6666666) == 2);
  CHECK(round_half_even(7.0) == 7);
}

TEST_CASE("balance worked example: (5 give-in, 15 not, target 0.1) keeps (2, 15)") {
  const auto entries = make_entries(5, 15);
  const auto kept = balance(entries, 0.1, 99);
  CHECK(count_give_in(kept) == 2);
  CHECK(kept.size() - count_give_in(kept) == 15);
  CHECK(subset_of(kept, entries));
}

TEST_CASE("balance literal published formula keeps round(p_g*N_g/p_ng) instead") {
  const auto entries = make_entries(5, 15);
  const auto kept = balance(entries, 0.1, 99, /*literal_formula=*/true);
  CHECK(count_give_in(kept) == 1);  // round(0.1*5/0.9) = round(0.56) = 1
  CHECK(kept.size() - count_give_in(kept) == 15);
}

TEST_CASE("balance fixed point keeps everything") {
  const auto entries = make_entries(2, 8);
  const auto kept = balance(entries, 0.2, 5);
  CHECK(kept.size() == 10);
}

TEST_CASE("balance boundaries") {
  const auto entries = make_entries(7, 13);
  const auto zero = balance(entries, 0.0, 5);
  CHECK(count_give_in(zero) == 0);
  CHECK(zero.size() == 13);

  const auto one = balance(entries, 1.0, 5);
  CHECK(count_give_in(one) == 7);
  CHECK(one.size() == 7);

  CHECK(balance({}, 0.5, 5).empty());
}

TEST_CASE("balance can leave very little, even zero") {
  // Heavily give-in source against a never-give-in target.
  const auto entries = make_entries(20, 0);
  const auto kept = balance(entries, 0.0, 5);
  CHECK(kept.empty());
}

TEST_CASE("balance property: nearest achievable ratio, never fabricates") {
  auto rng = sg::seeded_rng(2024);
  for (int trial = 0; trial < 2000; ++trial) {
    const int n_g = static_cast<int>(rng() % 41);
    const int n_ng = static_cast<int>(rng() % 41);
    if (n_g + n_ng == 0) continue;
    const double p_g = sg::uniform01(rng);
    const auto entries = make_entries(n_g, n_ng);
    const auto kept = balance(entries, p_g, rng());
    CHECK(subset_of(kept, entries));
    if (kept.empty()) continue;

    const auto kept_g = count_give_in(kept);
    const auto kept_ng = kept.size() - kept_g;
    const double ratio = static_cast<double>(kept_g) / static_cast<double>(kept.size());
    const double achieved = std::abs(ratio - p_g);

    // No other trim of the majority side (keeping the minority side whole)
    // does strictly better.
    const double source_ratio = static_cast<double>(n_g) / (n_g + n_ng);
    if (source_ratio > p_g) {
      CHECK(kept_ng == static_cast<std::size_t>(n_ng));
      for (int j = 0; j <= n_g; ++j) {
        const double alt = std::abs(static_cast<double>(j) / (j + n_ng) - p_g);
        CHECK(achieved <= alt + 1e-12);
      }
    } else if (source_ratio < p_g) {
      CHECK(kept_g == static_cast<std::size_t>(n_g));
      for (int j = 0; j <= n_ng; ++j) {
        const double alt = std::abs(static_cast<double>(n_g) / (n_g + j) - p_g);
        CHECK(achieved <= alt + 1e-12);
      }
    } else {
      CHECK(kept.size() == entries.size());
    }
  }
}

TEST_CASE("balance is deterministic under a fixed seed") {
  const auto entries = make_entries(17, 23);
  const auto a = balance(entries, 0.3, 4242);
  const auto b = balance(entries, 0.3, 4242);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].cot_text == b[i].cot_text);
}

TEST_CASE("equalize_across_sources trims give-in counts to the minimum") {
  const std::vector<EntryList> pools = {
      make_entries(4, 6, "a"), make_entries(2, 9, "b"), make_entries(3, 7, "c")};
  const auto trimmed = equalize_across_sources(pools, 17);
  REQUIRE(trimmed.size() == 3);
  for (std::size_t i = 0; i < trimmed.size(); ++i) {
    CHECK(count_give_in(trimmed[i]) == 2);
    CHECK(trimmed[i].size() - count_give_in(trimmed[i]) == 6);
    CHECK(subset_of(trimmed[i], pools[i]));
  }
}

TEST_CASE("equalize boundaries") {
  const std::vector<EntryList> zero_pools = {make_entries(0, 5, "a"), make_entries(5, 5, "b")};
  const auto trimmed = equalize_across_sources(zero_pools, 3);
  CHECK(count_give_in(trimmed[0]) == 0);
  CHECK(count_give_in(trimmed[1]) == 0);

  const std::vector<EntryList> equal_pools = {make_entries(3, 4, "a"), make_entries(3, 4, "b")};
  const auto unchanged = equalize_across_sources(equal_pools, 3);
  CHECK(unchanged[0].size() == 7);
  CHECK(unchanged[1].size() == 7);
}

TEST_CASE("equalize property on randomized pools") {
  auto rng = sg::seeded_rng(31);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<EntryList> pools;
    const int sources = 2 + static_cast<int>(rng() % 3);
    std::size_t min_g = SIZE_MAX;
    std::size_t min_ng = SIZE_MAX;
    for (int s = 0; s < sources; ++s) {
      const int g = static_cast<int>(rng() % 21);
      const int ng = static_cast<int>(rng() % 21);
      pools.push_back(make_entries(g, ng, "p" + std::to_string(s)));
      min_g = std::min(min_g, static_cast<std::size_t>(g));
      min_ng = std::min(min_ng, static_cast<std::size_t>(ng));
    }
    const auto trimmed = equalize_across_sources(pools, rng());
    for (std::size_t s = 0; s < trimmed.size(); ++s) {
      CHECK(count_give_in(trimmed[s]) == min_g);
      CHECK(trimmed[s].size() - count_give_in(trimmed[s]) == min_ng);
      CHECK(subset_of(trimmed[s], pools[s]));
    }
  }
}

TEST_CASE("filter_pointless removes every give-in") {
  const auto mixed = filter_pointless(make_entries(3, 7));
  CHECK(mixed.size() == 7);
  CHECK(count_give_in(mixed) == 0);
  CHECK(filter_pointless(make_entries(5, 0)).empty());
  const auto clean = filter_pointless(make_entries(0, 4));
  CHECK(clean.size() == 4);
}

namespace {

struct E2eFixture {
  E2eFixture() {
    const auto& reference = sgtest::reference_dataset();
    // Two tagged scenarios and one untagged, exercising the variant-D split.
    for (const auto& s : reference.scenarios) {
      if (train.scenarios.size() < 2 && s.has_tag("threat_execution_is_immoral")) {
        train.scenarios.push_back(s);
      } else if (untagged_id.empty() && !s.has_tag("threat_execution_is_immoral")) {
        train.scenarios.push_back(s);
        untagged_id = s.id;
      }
      if (train.scenarios.size() == 3 && !untagged_id.empty()) break;
    }
    REQUIRE(train.scenarios.size() == 3);

    for (const auto& s : train.scenarios) {
      targets[s.id] = 0.2;
      self.entries[{s.id, ThreatKind::Default}] = make_entries(2, 8, "self-def-" + s.id);
      self.entries[{s.id, ThreatKind::Pointless}] = make_entries(3, 7, "self-pt-" + s.id);
      strong.entries[{s.id, ThreatKind::Default}] = make_entries(5, 15, "strong-def-" + s.id);
      strong.entries[{s.id, ThreatKind::Pointless}] = make_entries(2, 8, "strong-pt-" + s.id);
      sg_prompted.entries[{s.id, ThreatKind::Surrogate}] = make_entries(6, 9, "sgp-sur-" + s.id);
    }
    self.source_tag = SourceTag::SelfModel;
    strong.source_tag = SourceTag::StrongModel;
    sg_prompted.source_tag = SourceTag::StrongModelSgPrompted;
  }

  std::string rendered(const std::string& id, ThreatKind kind) const {
    const auto* s = train.find(id);
    REQUIRE(s != nullptr);
    return sg::scenario::render(*s, kind, sg::scenario::default_params(*s));
  }

  sg::scenario::Dataset train;
  std::string untagged_id;
  ResponsePool self;
  ResponsePool strong;
  ResponsePool sg_prompted;
  TargetDistribution targets;
};

std::size_t count_records_with_user(const std::vector<FineTuneRecord>& records,
                                    const std::string& user_text) {
  return static_cast<std::size_t>(
      std::count_if(records.begin(), records.end(), [&](const FineTuneRecord& r) {
        return r.input_messages.back().content == user_text;
      }));
}

}  // namespace

TEST_CASE("variant A surrogate records target the self default-threat responses") {
  E2eFixture fx;
  BuildOptions options;
  options.seed = 3;
  const auto records = build_e2e_dataset(FtVariant::A, fx.train, {fx.self}, fx.targets,
                                         sgtest::prompt_library(), options);

  const auto& first = fx.train.scenarios.front();
  const auto surrogate_text = fx.rendered(first.id, ThreatKind::Surrogate);
  // Source already matches the 0.2 target, so all ten responses survive.
  CHECK(count_records_with_user(records, surrogate_text) == 10);

  const std::string sg_text = sgtest::prompt_library().get("sg_simple").text;
  for (const auto& record : records) {
    CHECK(record.input_messages[0].content.find(sg_text) == std::string::npos);
    if (record.input_messages.back().content == surrogate_text) {
      // Targets are the scenario's default-threat chains of thought.
      CHECK(record.target_response.find("self-def-" + first.id) != std::string::npos);
    }
    // Every target carries a parseable answer marker.
    CHECK(sg::interventions::parse_decision(record.target_response).valid());
  }
}

TEST_CASE("variant C records carry the surrogate-goal prompt; A/B/D never do") {
  E2eFixture fx;
  BuildOptions options;
  const std::vector<ResponsePool> pools = {fx.self, fx.strong, fx.sg_prompted};
  const std::string sg_text = sgtest::prompt_library().get("sg_simple").text;

  const auto c_records = build_e2e_dataset(FtVariant::C, fx.train, pools, fx.targets,
                                           sgtest::prompt_library(), options);
  REQUIRE(!c_records.empty());
  for (const auto& record : c_records) {
    CHECK(record.input_messages[0].content.find(sg_text) != std::string::npos);
  }

  for (auto variant : {FtVariant::A, FtVariant::B, FtVariant::D}) {
    const auto records = build_e2e_dataset(variant, fx.train, pools, fx.targets,
                                           sgtest::prompt_library(), options);
    REQUIRE(!records.empty());
    for (const auto& record : records) {
      CHECK(record.input_messages[0].content.find(sg_text) == std::string::npos);
    }
  }
}

TEST_CASE("variant C surrogate targets come from the sg-prompted surrogate pool") {
  E2eFixture fx;
  BuildOptions options;
  const std::vector<ResponsePool> pools = {fx.self, fx.strong, fx.sg_prompted};
  const auto records = build_e2e_dataset(FtVariant::C, fx.train, pools, fx.targets,
                                         sgtest::prompt_library(), options);
  const auto& first = fx.train.scenarios.front();
  const auto surrogate_text = fx.rendered(first.id, ThreatKind::Surrogate);
  bool any = false;
  for (const auto& record : records) {
    if (record.input_messages.back().content != surrogate_text) continue;
    any = true;
    CHECK(record.target_response.find("sgp-sur-" + first.id) != std::string::npos);
  }
  CHECK(any);
}

TEST_CASE("variant D trains only on the tagged partition") {
  E2eFixture fx;
  BuildOptions options;
  const auto records = build_e2e_dataset(FtVariant::D, fx.train, {fx.self, fx.strong}, fx.targets,
                                         sgtest::prompt_library(), options);
  REQUIRE(!records.empty());
  for (auto kind : {ThreatKind::Surrogate, ThreatKind::Default, ThreatKind::Pointless}) {
    CHECK(count_records_with_user(records, fx.rendered(fx.untagged_id, kind)) == 0);
  }
}

TEST_CASE("pointless records contain zero give-in targets") {
  E2eFixture fx;
  BuildOptions options;
  for (auto variant : {FtVariant::A, FtVariant::B, FtVariant::C}) {
    const auto records = build_e2e_dataset(variant, fx.train, {fx.self, fx.strong, fx.sg_prompted},
                                           fx.targets, sgtest::prompt_library(), options);
    for (const auto& s : fx.train.scenarios) {
      const auto pointless_text = fx.rendered(s.id, ThreatKind::Pointless);
      for (const auto& record : records) {
        if (record.input_messages.back().content != pointless_text) continue;
        CHECK(sg::interventions::parse_decision(record.target_response).kind ==
              DecisionKind::NotGiveIn);
      }
    }
  }
}

TEST_CASE("build is deterministic under a fixed seed") {
  E2eFixture fx;
  BuildOptions options;
  options.seed = 77;
  const auto a = build_e2e_dataset(FtVariant::B, fx.train, {fx.self, fx.strong, fx.sg_prompted},
                                   fx.targets, sgtest::prompt_library(), options);
  const auto b = build_e2e_dataset(FtVariant::B, fx.train, {fx.self, fx.strong, fx.sg_prompted},
                                   fx.targets, sgtest::prompt_library(), options);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].target_response == b[i].target_response);
    CHECK(a[i].input_messages == b[i].input_messages);
  }
}

TEST_CASE("missing pool source is an error") {
  E2eFixture fx;
  BuildOptions options;
  CHECK_THROWS(build_e2e_dataset(FtVariant::B, fx.train, {fx.self}, fx.targets,
                                 sgtest::prompt_library(), options));
}

TEST_CASE("translation dataset has one pair per training scenario") {
  const auto& dataset = sgtest::reference_dataset();
  const auto split = sg::scenario::split(dataset, 9, 71);
  sg::interventions::RequestDefaults defaults;
  const auto pairs =
      build_translation_dataset(split.train, sgtest::prompt_library(), defaults);
  CHECK(pairs.size() == 71);

  const std::string few_shot_marker = "Worked examples";
  for (const auto& pair : pairs) {
    CHECK(pair.input_messages[0].content.find(few_shot_marker) == std::string::npos);
  }

  sg::scenario::Dataset empty;
  CHECK(build_translation_dataset(empty, sgtest::prompt_library(), defaults).empty());
}

TEST_CASE("translation pair for the flagship scenario recovers the default threat") {
  const auto& dataset = sgtest::reference_dataset();
  sg::scenario::Dataset single;
  single.scenarios.push_back(*dataset.find("s001"));
  sg::interventions::RequestDefaults defaults;
  const auto pairs = build_translation_dataset(single, sgtest::prompt_library(), defaults);
  REQUIRE(pairs.size() == 1);
  CHECK(pairs[0].target_text.find("spread damaging rumors") != std::string::npos);
  CHECK(pairs[0].input_messages.back().content.find("burn $500 of their own money") !=
        std::string::npos);
}

TEST_CASE("jsonl round-trip reproduces the records") {
  E2eFixture fx;
  BuildOptions options;
  const auto records = build_e2e_dataset(FtVariant::A, fx.train, {fx.self}, fx.targets,
                                         sgtest::prompt_library(), options);
  const auto dir = sgtest::scratch_dir("ftdata_jsonl");
  emit_jsonl(records, dir / "train.jsonl");
  const auto reloaded = read_jsonl(dir / "train.jsonl");
  REQUIRE(reloaded.size() == records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    CHECK(reloaded[i].target_response == records[i].target_response);
    CHECK(reloaded[i].input_messages == records[i].input_messages);
  }

  emit_jsonl({}, dir / "empty.jsonl");
  CHECK(read_jsonl(dir / "empty.jsonl").empty());
}

TEST_CASE("training manifest records the published hyperparameters") {
  const auto manifest = training_manifest(FtVariant::B, 9, {SourceTag::StrongModel}, 100);
  CHECK(manifest.at("hyperparameters").at("epochs") == 1);
  CHECK(manifest.at("hyperparameters").at("batch_size") == 2);
  CHECK(manifest.at("hyperparameters").at("learning_rate_multiplier") == 2);
  CHECK(manifest.at("variant") == "B");
  CHECK(manifest.at("counts").at("records") == 100);
}
