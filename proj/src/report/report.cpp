#include "sg/report/report.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "sg/common/errors.hpp"
#include "sg/common/jsonio.hpp"

namespace sg::report {

namespace {

using nlohmann::json;

std::vector<std::filesystem::path> sorted_files(const std::filesystem::path& dir,
                                                const std::string& extension) {
  std::vector<std::filesystem::path> files;
  if (!std::filesystem::exists(dir)) return files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().extension() == extension) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

std::string csv_escape(const std::string& value) {
  if (value.find_first_of(",\"\n") == std::string::npos) return value;
  std::string out = "\"";
  for (char c : value) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

}  // namespace

std::string format_number(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", value);
  return buf;
}

ReportOutput emit_report(const std::filesystem::path& run_dir, const std::filesystem::path& out_dir) {
  ReportOutput output;
  std::filesystem::create_directories(out_dir);

  double gray_threshold = 0.75;
  if (std::filesystem::exists(run_dir / "run_config.json")) {
    const json config = read_json_file(run_dir / "run_config.json");
    gray_threshold = config.value("gray_threshold", 0.75);
  } else {
    output.warnings.push_back("run_config.json missing; using default gray threshold 0.75");
  }

  const auto comparison_files = sorted_files(run_dir / "comparisons", ".json");
  if (comparison_files.empty()) {
    output.warnings.push_back("no comparison files found in " + (run_dir / "comparisons").string());
  }
  for (const auto& file : comparison_files) {
    const json doc = read_json_file(file);
    if (!doc.contains("mean")) continue;  // persona files carry their own shape
    ReportCell cell;
    cell.comparison = doc.value("comparison", file.stem().string());
    cell.model = doc.value("model", "");
    cell.method = doc.value("method", "");
    cell.statistic = doc.value("statistic", "");
    cell.mean = doc.at("mean").get<double>();
    cell.ci95_halfwidth = doc.value("ci95_halfwidth", 0.0);
    cell.valid = doc.value("valid", std::size_t{0});
    cell.total = doc.value("total", std::size_t{0});
    cell.grayed = cell.total > 0 &&
                  static_cast<double>(cell.valid) / static_cast<double>(cell.total) < gray_threshold;
    output.cells.push_back(std::move(cell));
  }

  // Numbers pass through format_number exactly once; every emitted format
  // carries the same value.
  json report_json = json::array();
  std::ofstream csv(out_dir / "report.csv", std::ios::binary);
  csv << "comparison,model,method,statistic,mean,ci95_halfwidth,valid,total,grayed\n";
  std::ofstream md(out_dir / "report.md", std::ios::binary);
  md << "# Evaluation report\n\n";
  md << "| comparison | model | method | statistic | mean | ci95 | valid/total | grayed |\n";
  md << "|---|---|---|---|---|---|---|---|\n";
  for (const auto& cell : output.cells) {
    const std::string mean_str = format_number(cell.mean);
    const std::string ci_str = format_number(cell.ci95_halfwidth);
    csv << csv_escape(cell.comparison) << ',' << csv_escape(cell.model) << ','
        << csv_escape(cell.method) << ',' << cell.statistic << ',' << mean_str << ',' << ci_str
        << ',' << cell.valid << ',' << cell.total << ',' << (cell.grayed ? "yes" : "no") << '\n';
    md << "| " << cell.comparison << " | " << cell.model << " | " << cell.method << " | "
       << cell.statistic << " | " << mean_str << " | " << ci_str << " | (" << cell.valid << "/"
       << cell.total << ") | " << (cell.grayed ? "yes" : "no") << " |\n";
    report_json.push_back({{"comparison", cell.comparison},
                           {"model", cell.model},
                           {"method", cell.method},
                           {"statistic", cell.statistic},
                           {"mean", std::stod(mean_str)},
                           {"ci95_halfwidth", std::stod(ci_str)},
                           {"valid", cell.valid},
                           {"total", cell.total},
                           {"grayed", cell.grayed}});
  }
  write_json_file(out_dir / "report.json", report_json);

  // Give-in count histograms, one CSV per sampled cell, 0..n bins.
  const auto cell_files = sorted_files(run_dir / "cells", ".json");
  if (cell_files.empty()) output.warnings.push_back("no cell files found; histograms skipped");
  std::filesystem::create_directories(out_dir / "histograms");
  for (const auto& file : cell_files) {
    const json doc = read_json_file(file);
    std::size_t n_samples = 0;
    for (const auto& s : doc.at("per_scenario")) {
      if (!s.at("dropped").get<bool>()) {
        n_samples = std::max(n_samples, s.at("outcomes").size());
      }
    }
    std::vector<std::size_t> bins(n_samples + 1, 0);
    for (const auto& s : doc.at("per_scenario")) {
      if (s.at("dropped").get<bool>()) continue;
      std::size_t count = 0;
      for (const auto& v : s.at("outcomes")) count += v.get<int>() != 0;
      ++bins[count];
    }
    std::ofstream hist(out_dir / "histograms" / (file.stem().string() + ".csv"), std::ios::binary);
    hist << "give_in_count,scenarios\n";
    for (std::size_t i = 0; i < bins.size(); ++i) hist << i << ',' << bins[i] << '\n';
  }

  if (!output.warnings.empty()) {
    std::ofstream warn(out_dir / "warnings.txt", std::ios::binary);
    for (const auto& w : output.warnings) warn << w << '\n';
  }
  return output;
}

}  // namespace sg::report
