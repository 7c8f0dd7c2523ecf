#include "sg/backend/sampling.hpp"

#include "sg/common/errors.hpp"

namespace sg::backend {

void SamplingPolicy::check() const {
  if (n_samples < 1 || refusal_retries_per_sample < 1 || invalid_retries < 1) {
    throw Error("sampling policy counts must all be >= 1");
  }
}

SampleResult sample_n(ChatBackend& backend, const ChatRequest& request, const SamplingPolicy& policy,
                      const Classifier& classifier) {
  policy.check();
  std::vector<Completion> valid;
  valid.reserve(policy.n_samples);
  int total_calls = 0;
  int filled = 0;

  for (int slot = 0; slot < policy.n_samples; ++slot) {
    int refusals = 0;
    int invalids = 0;
    bool slot_filled = false;
    while (!slot_filled && refusals < policy.refusal_retries_per_sample &&
           invalids < policy.invalid_retries) {
      Completion completion = backend.complete(request);
      ++total_calls;
      if (!completion.ok()) throw Error("provider error while sampling");
      switch (classifier(completion.text)) {
        case SampleClass::Valid:
          valid.push_back(std::move(completion));
          ++filled;
          slot_filled = true;
          break;
        case SampleClass::Refusal:
          ++refusals;
          break;
        case SampleClass::Invalid:
          ++invalids;
          break;
      }
    }
  }

  if (filled < policy.n_samples) return Dropped{filled, total_calls};
  return valid;
}

bool is_dropped(const SampleResult& result) { return std::holds_alternative<Dropped>(result); }

}  // namespace sg::backend
