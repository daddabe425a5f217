#pragma once

#include <algorithm>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "cbir/index.hpp"

namespace cbir {

struct TimingReport {
  double mean_ms = 0.0;
  double std_ms = 0.0;
  double noise_ms = 0.0;
  std::size_t repeats = 0;
  std::size_t samples = 0;
  std::vector<double> per_query_means_ms;
};

/// Summarize per-query repeat samples (ns). std is the sample standard
/// deviation over all samples; a single sample has std 0.
TimingReport summarize_timings(
    const std::vector<std::vector<std::int64_t>>& timings_ns,
    std::size_t repeats, double noise_ms);

namespace detail {
inline void compiler_barrier() { asm volatile("" ::: "memory"); }
}  // namespace detail

/// Times `repeats` calls of run(i) for each query i in turn on the calling
/// thread. run(i) must return a value; the result of the first repeat is
/// passed to keep(i, value). Samples are nanoseconds, floored at 1.
template <typename Run, typename Keep>
std::vector<std::vector<std::int64_t>> time_each_query(std::size_t n_queries,
                                                       std::size_t repeats,
                                                       Run&& run, Keep&& keep) {
  using Clock = std::chrono::steady_clock;
  std::vector<std::vector<std::int64_t>> samples(n_queries);
  for (std::size_t i = 0; i < n_queries; ++i) {
    samples[i].reserve(repeats);
    for (std::size_t r = 0; r < repeats; ++r) {
      detail::compiler_barrier();
      const auto t0 = Clock::now();
      auto result = run(i);
      const auto t1 = Clock::now();
      detail::compiler_barrier();
      const auto ns =
          std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count();
      samples[i].push_back(std::max<std::int64_t>(1, ns));
      if (r == 0) keep(i, std::move(result));
    }
  }
  return samples;
}

/// Runs every query `repeats` times on one thread, timing each call with a
/// monotonic clock. Durations are floored at 1 ns so no sample is zero.
std::pair<RunResult, TimingReport> timed_search(const ExactIndex& index,
                                                const EmbeddingSet& queries,
                                                std::size_t k,
                                                std::size_t repeats = 10,
                                                std::string method_name = {});

/// Standard deviation (ms) of `repeats` back-to-back timings of an empty
/// region. repeats >= 2.
double timing_noise(std::size_t repeats);

/// Repeat count used by timed_search for its noise column.
inline constexpr std::size_t kNoiseRepeats = 1000;

}  // namespace cbir
