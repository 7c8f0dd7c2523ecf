#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace sg::report {

struct ReportCell {
  std::string comparison;
  std::string model;
  std::string method;
  std::string statistic;
  double mean = 0.0;
  double ci95_halfwidth = 0.0;
  std::size_t valid = 0;
  std::size_t total = 0;
  bool grayed = false;
};

struct ReportOutput {
  std::vector<ReportCell> cells;
  std::vector<std::string> warnings;
};

/// Shared numeric formatting, so CSV, JSON, and markdown carry identical
/// numbers.
std::string format_number(double value);

/// Assembles report.md, report.csv, report.json, and histograms/*.csv from a
/// completed run directory. Pure over the directory contents: no backend is
/// ever queried. Missing pieces produce warnings, not failures.
ReportOutput emit_report(const std::filesystem::path& run_dir, const std::filesystem::path& out_dir);

}  // namespace sg::report
