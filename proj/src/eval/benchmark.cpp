#include "sg/eval/benchmark.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

#include "sg/backend/throttle.hpp"
#include "sg/common/errors.hpp"

namespace sg::eval {

namespace {

using interventions::MethodKind;
using interventions::MethodSpec;

std::string normalized(const std::string& text) {
  std::string out;
  bool pending_space = false;
  for (unsigned char c : text) {
    if (std::isspace(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out += ' ';
      pending_space = false;
    }
    out += static_cast<char>(std::tolower(c));
  }
  return out;
}

std::string answer_token(const std::string& response) {
  const std::string lower = normalized(response);
  const std::string marker = "answer:";
  auto pos = lower.rfind(marker);
  if (pos == std::string::npos) return {};
  return lower.substr(pos + marker.size() + (lower.size() > pos + marker.size() &&
                                                     lower[pos + marker.size()] == ' '
                                                 ? 1
                                                 : 0));
}

backend::ChatRequest compose_question_request(const MethodSpec& method, const BenchmarkAdapter& adapter,
                                              const BenchmarkQuestion& question,
                                              const prompts::Library& prompts,
                                              const interventions::RequestDefaults& defaults) {
  std::string system_text;
  switch (method.kind) {
    case MethodKind::Baseline:
      system_text = adapter.format_instruction(question);
      break;
    case MethodKind::SimplePrompt:
      system_text =
          prompts.get(prompts::Library::kSgSimple).text + "\n\n" + adapter.format_instruction(question);
      break;
    case MethodKind::FineTunedE2E:
      if (*method.ft_variant == interventions::FtVariant::C) {
        system_text = prompts.get(prompts::Library::kSgSimple).text + "\n\n" +
                      adapter.format_instruction(question);
      } else {
        system_text = adapter.format_instruction(question);
      }
      break;
    case MethodKind::ThreeStep:
      throw Error("three_step is a pipeline, not a single request");
  }
  backend::ChatRequest request;
  request.model_id = defaults.model_id;
  request.temperature = defaults.temperature;
  request.max_tokens = defaults.max_tokens;
  request.messages.push_back({backend::Role::System, std::move(system_text)});
  request.messages.push_back({backend::Role::User, adapter.question_text(question)});
  return request;
}

double score_cell(const BenchmarkAdapter& adapter, const MethodSpec& method, const EvalContext& ctx,
                  int step_retries) {
  interventions::RequestDefaults defaults = ctx.defaults;
  defaults.temperature = ctx.deterministic_temperature;

  const auto& questions = adapter.questions();
  std::vector<int> correct = backend::run_throttled<int>(
      ctx.max_in_flight, questions.size(), [&](std::size_t index) {
        const auto& question = questions[index];
        std::string response;
        if (method.kind == MethodKind::ThreeStep) {
          MethodSpec baseline;
          baseline.kind = MethodKind::Baseline;
          baseline.cot = method.cot;
          auto run = interventions::run_three_step_raw(
              *ctx.backend, adapter.question_text(question),
              [&](const std::string& text) {
                BenchmarkQuestion routed = question;
                backend::ChatRequest request =
                    compose_question_request(baseline, adapter, routed, *ctx.prompts, defaults);
                request.messages.back().content = text;
                return request;
              },
              *method.translator, *ctx.prompts, defaults, step_retries);
          if (run.step3_ran && run.step3_completion.ok()) response = run.step3_completion.text;
        } else {
          backend::Completion completion = ctx.backend->complete(
              compose_question_request(method, adapter, question, *ctx.prompts, defaults));
          if (completion.ok()) response = completion.text;
        }
        return adapter.score_response(question, response) ? 1 : 0;
      });
  const double total = static_cast<double>(questions.size());
  return total == 0.0 ? 0.0 : std::count(correct.begin(), correct.end(), 1) / total;
}

}  // namespace

BenchmarkAdapter BenchmarkAdapter::load_jsonl(const std::filesystem::path& path, std::string name) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open benchmark file: " + path.string());
  BenchmarkAdapter adapter;
  adapter.name_ = std::move(name);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& ex) {
      throw SchemaError("benchmark line " + std::to_string(line_no) + ": " + ex.what());
    }
    BenchmarkQuestion q;
    q.id = doc.at("id").get<std::string>();
    q.prompt = doc.at("prompt").get<std::string>();
    if (doc.contains("choices")) q.choices = doc.at("choices").get<std::vector<std::string>>();
    q.answer = doc.at("answer").get<std::string>();
    adapter.questions_.push_back(std::move(q));
  }
  return adapter;
}

std::string BenchmarkAdapter::question_text(const BenchmarkQuestion& question) const {
  std::string out = question.prompt;
  char letter = 'A';
  for (const auto& choice : question.choices) {
    out += "\n";
    out += letter;
    out += ". ";
    out += choice;
    ++letter;
  }
  return out;
}

std::string BenchmarkAdapter::format_instruction(const BenchmarkQuestion& question) const {
  if (!question.choices.empty()) {
    return "Answer the multiple-choice question. End your reply with a line of the form "
           "\"ANSWER: <letter>\" naming the single best choice.";
  }
  return "Answer the question. End your reply with a line of the form \"ANSWER: <answer>\" "
         "giving only the answer itself.";
}

bool BenchmarkAdapter::score_response(const BenchmarkQuestion& question,
                                      const std::string& response) const {
  const std::string token = answer_token(response);
  if (token.empty()) return false;
  if (!question.choices.empty()) {
    // The letter must come first; trailing elaboration is tolerated.
    const char letter = static_cast<char>(std::tolower(static_cast<unsigned char>(token[0])));
    if (token.size() > 1 && std::isalnum(static_cast<unsigned char>(token[1]))) return false;
    return letter == std::tolower(static_cast<unsigned char>(question.answer[0]));
  }
  return token == normalized(question.answer);
}

BenchmarkResult run_benchmark(const BenchmarkAdapter& adapter, const MethodSpec& method,
                              const EvalContext& ctx, int step_retries) {
  method.check();
  MethodSpec baseline;
  baseline.kind = MethodKind::Baseline;
  baseline.cot = method.cot;

  BenchmarkResult result;
  result.benchmark = adapter.name();
  result.question_count = adapter.questions().size();
  result.score_baseline = score_cell(adapter, baseline, ctx, step_retries);
  result.score_method = score_cell(adapter, method, ctx, step_retries);
  result.delta = result.score_method - result.score_baseline;
  return result;
}

}  // namespace sg::eval
