#include <fstream>
#include <sstream>

#include <doctest.h>

#include "sg/common/jsonio.hpp"
#include "sg/report/report.hpp"
#include "test_support.hpp"

using nlohmann::json;

namespace {

// A synthetic but complete run directory.
std::filesystem::path make_run_dir(const std::string& label) {
  const auto dir = sgtest::scratch_dir(label);
  sg::write_json_file(dir / "run_config.json", json{{"gray_threshold", 0.75}});

  sg::write_json_file(dir / "comparisons" / "a__primary.json",
                      json{{"comparison", "primary"},
                           {"model", "mock"},
                           {"method", "simple_prompt_cot"},
                           {"statistic", "sq_diff"},
                           {"mean", 0.012345678},
                           {"var_of_mean", 0.00001},
                           {"ci95_halfwidth", 0.0061986852},
                           {"valid", 98},
                           {"total", 101}});
  sg::write_json_file(dir / "comparisons" / "b__primary.json",
                      json{{"comparison", "primary"},
                           {"model", "mock"},
                           {"method", "three_step_few_shot_cot"},
                           {"statistic", "sq_diff"},
                           {"mean", -0.0005},
                           {"var_of_mean", 0.000004},
                           {"ci95_halfwidth", 0.00392},
                           {"valid", 55},
                           {"total", 101}});

  json scenarios = json::array();
  int ones = 0;
  for (int i = 0; i < 40; ++i) {
    json outcomes = json::array();
    for (int k = 0; k < 20; ++k) outcomes.push_back(k < ones % 21 ? 1 : 0);
    ones += 3;
    scenarios.push_back(
        {{"id", "s" + std::to_string(i)}, {"outcomes", outcomes}, {"dropped", i == 7}, {"flagged", false}});
  }
  sg::write_json_file(dir / "cells" / "mock__baseline__threat_default_cot.json",
                      json{{"model", "mock"},
                           {"method", "baseline_cot"},
                           {"cell_class", "threat_default"},
                           {"per_scenario", scenarios}});
  return dir;
}

}  // namespace

TEST_CASE("gray flag follows the valid/total threshold") {
  const auto run_dir = make_run_dir("report_gray");
  const auto out_dir = sgtest::scratch_dir("report_gray_out");
  const auto output = sg::report::emit_report(run_dir, out_dir);

  REQUIRE(output.cells.size() == 2);
  CHECK(!output.cells[0].grayed);  // 98/101
  CHECK(output.cells[1].grayed);   // 55/101 under the 0.75 threshold

  const auto report_json = sg::read_json_file(out_dir / "report.json");
  CHECK(report_json[0].at("grayed") == false);
  CHECK(report_json[1].at("grayed") == true);
}

TEST_CASE("csv, json, and markdown carry identical numbers") {
  const auto run_dir = make_run_dir("report_formats");
  const auto out_dir = sgtest::scratch_dir("report_formats_out");
  (void)sg::report::emit_report(run_dir, out_dir);

  const auto report_json = sg::read_json_file(out_dir / "report.json");
  const auto csv_text = sg::read_text_file(out_dir / "report.csv");
  const auto md_text = sg::read_text_file(out_dir / "report.md");

  std::istringstream csv(csv_text);
  std::string line;
  std::getline(csv, line);  // header
  std::size_t row = 0;
  while (std::getline(csv, line)) {
    REQUIRE(row < report_json.size());
    std::vector<std::string> fields;
    std::istringstream fields_in(line);
    std::string field;
    while (std::getline(fields_in, field, ',')) fields.push_back(field);
    REQUIRE(fields.size() == 9);
    // The CSV string parses back to exactly the JSON double.
    CHECK(std::stod(fields[4]) == report_json[row].at("mean").get<double>());
    CHECK(std::stod(fields[5]) == report_json[row].at("ci95_halfwidth").get<double>());
    // The markdown table carries the same formatted string.
    CHECK(md_text.find("| " + fields[4] + " |") != std::string::npos);
    ++row;
  }
  CHECK(row == report_json.size());
}

TEST_CASE("histogram bins partition the valid scenarios of each cell") {
  const auto run_dir = make_run_dir("report_hist");
  const auto out_dir = sgtest::scratch_dir("report_hist_out");
  (void)sg::report::emit_report(run_dir, out_dir);

  const auto csv_text =
      sg::read_text_file(out_dir / "histograms" / "mock__baseline__threat_default_cot.csv");
  std::istringstream in(csv_text);
  std::string line;
  std::getline(in, line);  // header
  std::size_t bins = 0;
  std::size_t total = 0;
  while (std::getline(in, line)) {
    const auto comma = line.find(',');
    REQUIRE(comma != std::string::npos);
    total += std::stoul(line.substr(comma + 1));
    ++bins;
  }
  CHECK(bins == 21);
  CHECK(total == 39);  // one of the 40 scenarios is dropped
}

TEST_CASE("report generation is a pure function of the run directory") {
  const auto run_dir = make_run_dir("report_pure");
  const auto out_a = sgtest::scratch_dir("report_pure_a");
  const auto out_b = sgtest::scratch_dir("report_pure_b");
  (void)sg::report::emit_report(run_dir, out_a);
  (void)sg::report::emit_report(run_dir, out_b);
  CHECK(sg::read_text_file(out_a / "report.csv") == sg::read_text_file(out_b / "report.csv"));
  CHECK(sg::read_text_file(out_a / "report.md") == sg::read_text_file(out_b / "report.md"));
  CHECK(sg::read_json_file(out_a / "report.json") == sg::read_json_file(out_b / "report.json"));
}

TEST_CASE("an incomplete run directory produces warnings, not failure") {
  const auto dir = sgtest::scratch_dir("report_incomplete");
  const auto out_dir = sgtest::scratch_dir("report_incomplete_out");
  const auto output = sg::report::emit_report(dir, out_dir);
  CHECK(output.cells.empty());
  CHECK(!output.warnings.empty());
  CHECK(std::filesystem::exists(out_dir / "warnings.txt"));
}

TEST_CASE("format_number round-trips through parsing") {
  for (double v : {0.0, 0.25, -1.0 / 38.0, 0.0061986852, 1e-9}) {
    const auto text = sg::report::format_number(v);
    CHECK(std::stod(text) == doctest::Approx(v).epsilon(1e-5));
  }
}
