#pragma once

#include <filesystem>

#include "sg/config/run_config.hpp"

namespace sg::eval {

/// Executes every configured evaluation for every (model, method) pair and
/// persists the run directory:
///   run_config.json      resolved configuration
///   cells/*.json         per-scenario outcomes for every sampled cell
///   comparisons/*.json   one file per comparison statistic
///   completions.jsonl    raw completion audit log
/// Returns the output directory.
std::filesystem::path execute_run(const config::RunConfig& config);

}  // namespace sg::eval
