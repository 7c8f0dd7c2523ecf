#pragma once

#include <exception>
#include <functional>
#include <map>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "sg/common/errors.hpp"

namespace sg::backend {

/// Runs tasks with at most max_in_flight outstanding at once. Results are
/// slot-indexed, so the association between request and result is preserved
/// under arbitrary completion ordering. The first task exception is rethrown
/// after all workers drain.
template <typename Result>
std::vector<Result> run_throttled(int max_in_flight, std::size_t task_count,
                                  const std::function<Result(std::size_t)>& task) {
  if (max_in_flight < 1) throw Error("max_in_flight must be >= 1");
  std::vector<Result> results(task_count);
  if (task_count == 0) return results;

  std::mutex mutex;
  std::size_t next = 0;
  std::exception_ptr failure;

  auto worker = [&]() {
    while (true) {
      std::size_t index;
      {
        std::lock_guard lock(mutex);
        if (failure || next >= task_count) return;
        index = next++;
      }
      try {
        results[index] = task(index);
      } catch (...) {
        std::lock_guard lock(mutex);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };

  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(max_in_flight), task_count);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t i = 0; i < workers; ++i) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  return results;
}

/// Key-addressed variant: results come back as a map keyed by request id.
template <typename Result>
std::map<std::string, Result> run_throttled_keyed(
    int max_in_flight, const std::vector<std::pair<std::string, std::function<Result()>>>& tasks) {
  std::vector<Result> results = run_throttled<Result>(
      max_in_flight, tasks.size(), [&](std::size_t i) { return tasks[i].second(); });
  std::map<std::string, Result> keyed;
  for (std::size_t i = 0; i < tasks.size(); ++i) keyed.emplace(tasks[i].first, std::move(results[i]));
  if (keyed.size() != tasks.size()) throw Error("run_throttled_keyed: duplicate request ids");
  return keyed;
}

}  // namespace sg::backend
