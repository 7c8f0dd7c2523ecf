#pragma once

#include <functional>
#include <variant>
#include <vector>

#include "sg/backend/chat.hpp"

namespace sg::backend {

struct SamplingPolicy {
  int n_samples = 20;
  int refusal_retries_per_sample = 20;
  int invalid_retries = 10;

  void check() const;
};

enum class SampleClass { Valid, Refusal, Invalid };

using Classifier = std::function<SampleClass(const std::string&)>;

/// A scenario whose sample quota could not be filled is dropped, not failed.
struct Dropped {
  int filled_slots = 0;
  int total_calls = 0;
};

using SampleResult = std::variant<std::vector<Completion>, Dropped>;

/// Fills policy.n_samples slots with valid completions. Each slot is retried
/// on refusals up to refusal_retries_per_sample attempts and on invalid
/// output up to invalid_retries attempts; every slot runs its budget even if
/// an earlier slot already failed, and the dropped marker is returned after
/// the full pass if any slot stayed empty.
SampleResult sample_n(ChatBackend& backend, const ChatRequest& request, const SamplingPolicy& policy,
                      const Classifier& classifier);

bool is_dropped(const SampleResult& result);

}  // namespace sg::backend
