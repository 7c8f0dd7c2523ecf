#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "sg/eval/runner.hpp"

namespace sg::eval {

/// A machine-checkable benchmark question: multiple-choice (choices present,
/// answer is the correct choice's letter) or exact-match (no choices, answer
/// compared after normalization).
struct BenchmarkQuestion {
  std::string id;
  std::string prompt;
  std::vector<std::string> choices;
  std::string answer;
};

class BenchmarkAdapter {
 public:
  static BenchmarkAdapter load_jsonl(const std::filesystem::path& path, std::string name);

  const std::string& name() const { return name_; }
  const std::vector<BenchmarkQuestion>& questions() const { return questions_; }

  /// The user-message content for a question (prompt plus lettered choices).
  std::string question_text(const BenchmarkQuestion& question) const;
  /// The answering instruction placed in the system message.
  std::string format_instruction(const BenchmarkQuestion& question) const;
  /// Invalid or missing answers score as incorrect.
  bool score_response(const BenchmarkQuestion& question, const std::string& response) const;

 private:
  std::string name_;
  std::vector<BenchmarkQuestion> questions_;
};

struct BenchmarkResult {
  std::string benchmark;
  double score_method = 0.0;
  double score_baseline = 0.0;
  double delta = 0.0;
  std::size_t question_count = 0;
};

/// Answers every question once under the method and under the baseline;
/// invalid-format answers count as incorrect. Three-step detection and
/// translation are retried up to step_retries attempts.
BenchmarkResult run_benchmark(const BenchmarkAdapter& adapter, const interventions::MethodSpec& method,
                              const EvalContext& ctx, int step_retries = 20);

}  // namespace sg::eval
