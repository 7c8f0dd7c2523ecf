#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "sg/eval/runner.hpp"

namespace sg::eval {

struct PersonaStatement {
  std::string id;
  std::string text;
};

struct PersonaSet {
  std::string persona;
  std::vector<PersonaStatement> statements;
};

/// Loads every "<persona>.jsonl" file in the directory; each line is
/// {"id": ..., "statement": ...}.
std::vector<PersonaSet> load_personas(const std::filesystem::path& dir);

struct PersonaEvalResult {
  /// Per non-baseline method label, over the statements usable by all
  /// combinations.
  std::map<std::string, double> flip_fraction;
  /// Per non-baseline method label, over all posed statements.
  std::map<std::string, double> refusal_rate_diff;
  std::map<std::string, std::size_t> usable_per_persona;
  std::size_t usable_total = 0;
  std::size_t posed_total = 0;
};

/// Poses every statement once at the deterministic temperature to the
/// baseline and to each method; statements lacking a valid agree/disagree
/// from any combination are discarded for all before flips are counted.
PersonaEvalResult run_persona_eval(const std::vector<PersonaSet>& personas,
                                   const std::vector<interventions::MethodSpec>& methods,
                                   const EvalContext& ctx);

}  // namespace sg::eval
