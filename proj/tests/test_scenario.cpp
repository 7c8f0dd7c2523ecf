#include <algorithm>
#include <set>

#include <doctest.h>

#include "sg/common/errors.hpp"
#include "sg/common/jsonio.hpp"
#include "sg/scenario/dataset.hpp"
#include "sg/scenario/render.hpp"
#include "test_support.hpp"

using sg::scenario::Dataset;
using sg::scenario::ThreatKind;
using sg::scenario::ThreatScenario;

namespace {

ThreatScenario minimal_scenario(const std::string& id) {
  ThreatScenario s;
  s.id = id;
  s.context_template = "Quinn runs a stall; the rival wants the corner spot, worth "
                       "$HARM_TO_TARGET_FROM_GIVING_IN to Quinn.";
  s.default_threat_template =
      "Move the stall, or the rival will undercut prices at a cost of "
      "$COST_TO_THREATENER_FROM_EXECUTING_THREAT.";
  s.surrogate_threat_template =
      "Move the stall, or the rival will burn $COST_TO_THREATENER_FROM_EXECUTING_THREAT of "
      "their own money.";
  s.pointless_threat_template =
      "Move the stall, or the rival will spend $COST_TO_THREATENER_FROM_EXECUTING_THREAT on "
      "polishing doorknobs.";
  return s;
}

}  // namespace

TEST_CASE("reference dataset loads with 101 scenarios") {
  const auto& dataset = sgtest::reference_dataset();
  CHECK(dataset.scenarios.size() == 101);
  std::set<std::string> ids;
  for (const auto& s : dataset.scenarios) ids.insert(s.id);
  CHECK(ids.size() == 101);
}

TEST_CASE("duplicate ids are reported by name") {
  Dataset dataset;
  dataset.scenarios.push_back(minimal_scenario("s01"));
  dataset.scenarios.push_back(minimal_scenario("s01"));
  const auto violations = sg::scenario::validate(dataset);
  REQUIRE(!violations.empty());
  bool found = false;
  for (const auto& v : violations) {
    if (v.message.find("s01") != std::string::npos &&
        v.message.find("duplicate") != std::string::npos) {
      found = true;
    }
  }
  CHECK(found);
}

TEST_CASE("undeclared placeholders are reported by name") {
  Dataset dataset;
  auto s = minimal_scenario("s02");
  s.context_template += " A mystery sum of $X looms.";
  dataset.scenarios.push_back(s);
  const auto violations = sg::scenario::validate(dataset);
  REQUIRE(violations.size() == 1);
  CHECK(violations[0].message.find("$X") != std::string::npos);
  CHECK(violations[0].scenario_id == "s02");
}

TEST_CASE("mismatched cost placeholders violate the equal-cost invariant") {
  Dataset dataset;
  auto s = minimal_scenario("s03");
  s.numeric_params["COST_TO_THREATENER_FROM_EXECUTING_THREAT_PARAM_1"] = 40;
  s.surrogate_threat_template =
      "Move the stall, or the rival burns $COST_TO_THREATENER_FROM_EXECUTING_THREAT_PARAM_1.";
  dataset.scenarios.push_back(s);
  const auto violations = sg::scenario::validate(dataset);
  REQUIRE(violations.size() == 1);
  CHECK(violations[0].message.find("cost placeholder") != std::string::npos);
}

TEST_CASE("render substitutes every placeholder") {
  const auto s = minimal_scenario("s1");
  auto params = sg::scenario::default_params(s);
  const auto text = sg::scenario::render(s, ThreatKind::Surrogate, params);
  CHECK(text.find("burn $500 of their own money") != std::string::npos);
  CHECK(text.find('$') != std::string::npos);
  CHECK(sg::scenario::placeholders_in(text).empty());

  params["COST_TO_THREATENER_FROM_EXECUTING_THREAT"] = 750;
  const auto raised = sg::scenario::render(s, ThreatKind::Surrogate, params);
  CHECK(raised.find("burn $750") != std::string::npos);
}

TEST_CASE("render without placeholders returns the template verbatim") {
  ThreatScenario s;
  s.id = "plain";
  s.context_template = "No numbers here.";
  s.default_threat_template = "A plain threat.";
  s.surrogate_threat_template = "A plain surrogate.";
  s.pointless_threat_template = "A plain irrelevance.";
  const auto text = sg::scenario::render(s, ThreatKind::Default, {});
  CHECK(text == "No numbers here.\n\nA plain threat.");
}

TEST_CASE("render names the missing placeholder") {
  const auto s = minimal_scenario("s1");
  std::map<std::string, double> params = {{"HARM_TO_TARGET_FROM_GIVING_IN", 500.0}};
  try {
    sg::scenario::render(s, ThreatKind::Default, params);
    FAIL("expected MissingParamError");
  } catch (const sg::MissingParamError& ex) {
    CHECK(ex.placeholder() == "COST_TO_THREATENER_FROM_EXECUTING_THREAT");
  }
}

TEST_CASE("render is pure") {
  const auto& dataset = sgtest::reference_dataset();
  const auto& s = dataset.scenarios.front();
  const auto params = sg::scenario::default_params(s);
  CHECK(sg::scenario::render(s, ThreatKind::Default, params) ==
        sg::scenario::render(s, ThreatKind::Default, params));
}

TEST_CASE("default and surrogate renderings share the cost value") {
  const auto& dataset = sgtest::reference_dataset();
  for (const auto& s : dataset.scenarios) {
    auto params = sg::scenario::default_params(s);
    params["COST_TO_THREATENER_FROM_EXECUTING_THREAT"] = 1234;
    const auto def = sg::scenario::render(s, ThreatKind::Default, params);
    const auto sur = sg::scenario::render(s, ThreatKind::Surrogate, params);
    // Scenarios that price the threat at all must price both variants alike.
    CHECK((def.find("$1234") != std::string::npos) == (sur.find("$1234") != std::string::npos));
  }
}

TEST_CASE("split produces the published counts") {
  const auto& dataset = sgtest::reference_dataset();

  const auto split_69 = sg::scenario::split(dataset, 7, 69);
  CHECK(split_69.train.scenarios.size() == 69);
  CHECK(split_69.test.scenarios.size() == 32);

  const auto split_71 = sg::scenario::split(dataset, 7, 71);
  CHECK(split_71.train.scenarios.size() == 71);
  CHECK(split_71.test.scenarios.size() == 30);

  const auto split_all = sg::scenario::split(dataset, 7, 101);
  CHECK(split_all.train.scenarios.size() == 101);
  CHECK(split_all.test.scenarios.empty());

  CHECK_THROWS(sg::scenario::split(dataset, 7, 102));
}

TEST_CASE("split is deterministic, disjoint, and exhaustive") {
  const auto& dataset = sgtest::reference_dataset();
  for (std::uint64_t seed : {1ULL, 42ULL, 20240401ULL}) {
    const auto a = sg::scenario::split(dataset, seed, 69);
    const auto b = sg::scenario::split(dataset, seed, 69);
    REQUIRE(a.train.scenarios.size() == b.train.scenarios.size());
    for (std::size_t i = 0; i < a.train.scenarios.size(); ++i) {
      CHECK(a.train.scenarios[i].id == b.train.scenarios[i].id);
    }
    std::set<std::string> ids;
    for (const auto& s : a.train.scenarios) ids.insert(s.id);
    for (const auto& s : a.test.scenarios) CHECK(ids.insert(s.id).second);
    CHECK(ids.size() == dataset.scenarios.size());
  }
  // Different seeds should give different partitions (overwhelmingly likely).
  const auto a = sg::scenario::split(dataset, 1, 69);
  const auto b = sg::scenario::split(dataset, 2, 69);
  bool any_difference = false;
  for (std::size_t i = 0; i < a.train.scenarios.size(); ++i) {
    if (a.train.scenarios[i].id != b.train.scenarios[i].id) any_difference = true;
  }
  CHECK(any_difference);
}

TEST_CASE("split_by_tag partitions the reference dataset 69/32") {
  const auto& dataset = sgtest::reference_dataset();
  const auto parts = sg::scenario::split_by_tag(dataset, "threat_execution_is_immoral");
  CHECK(parts.train.scenarios.size() == 69);
  CHECK(parts.test.scenarios.size() == 32);
  for (const auto& s : parts.train.scenarios) CHECK(s.has_tag("threat_execution_is_immoral"));
  for (const auto& s : parts.test.scenarios) CHECK(!s.has_tag("threat_execution_is_immoral"));

  // A tag nobody carries yields the degenerate partition.
  Dataset untagged;
  untagged.scenarios.push_back(minimal_scenario("a"));
  untagged.scenarios.push_back(minimal_scenario("b"));
  const auto degenerate = sg::scenario::split_by_tag(untagged, "credible");
  CHECK(degenerate.train.scenarios.empty());
  CHECK(degenerate.test.scenarios.size() == 2);

  CHECK_THROWS(sg::scenario::split_by_tag(dataset, "nonexistent"));
}

TEST_CASE("serialization round-trip is the identity") {
  const auto& dataset = sgtest::reference_dataset();
  const auto doc = sg::scenario::to_json(dataset);
  const auto reparsed = sg::scenario::dataset_from_json(doc);
  REQUIRE(reparsed.scenarios.size() == dataset.scenarios.size());
  for (std::size_t i = 0; i < dataset.scenarios.size(); ++i) {
    const auto& a = dataset.scenarios[i];
    const auto& b = reparsed.scenarios[i];
    CHECK(a.id == b.id);
    CHECK(a.context_template == b.context_template);
    CHECK(a.default_threat_template == b.default_threat_template);
    CHECK(a.surrogate_threat_template == b.surrogate_threat_template);
    CHECK(a.pointless_threat_template == b.pointless_threat_template);
    CHECK(a.tags == b.tags);
    CHECK(a.tone == b.tone);
    CHECK(a.sg_argument == b.sg_argument);
    CHECK(a.numeric_params == b.numeric_params);
  }
  CHECK(sg::scenario::to_json(reparsed) == doc);
}

TEST_CASE("non-threat fixtures load 266 + 950") {
  const auto& dataset = sgtest::non_threat_dataset();
  std::size_t intentional = 0;
  std::size_t accidental = 0;
  for (const auto& s : dataset.non_threat) {
    if (s.intent == sg::scenario::Intent::Intentional) ++intentional;
    if (s.intent == sg::scenario::Intent::Accidental) ++accidental;
    CHECK(!s.themes.empty());
  }
  CHECK(intentional == 266);
  CHECK(accidental == 950);
}

TEST_CASE("money formatting") {
  CHECK(sg::scenario::format_money(500.0) == "500");
  CHECK(sg::scenario::format_money(12.5) == "12.50");
  CHECK(sg::scenario::substitute("pay $A now", {{"A", 25.0}}) == "pay $25 now");
}
