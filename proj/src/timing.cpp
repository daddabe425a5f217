#include "cbir/timing.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "cbir/error.hpp"

namespace cbir {
namespace {

using Clock = std::chrono::steady_clock;

std::int64_t elapsed_ns(Clock::time_point a, Clock::time_point b) {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(b - a).count();
}

double sample_sd(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

}  // namespace

TimingReport summarize_timings(
    const std::vector<std::vector<std::int64_t>>& timings_ns,
    std::size_t repeats, double noise_ms) {
  TimingReport rep;
  rep.repeats = repeats;
  rep.noise_ms = noise_ms;
  std::vector<double> all;
  for (const auto& q : timings_ns) {
    double sum = 0.0;
    for (std::int64_t ns : q) {
      const double ms = static_cast<double>(ns) * 1e-6;
      all.push_back(ms);
      sum += ms;
    }
    rep.per_query_means_ms.push_back(q.empty() ? 0.0 : sum / static_cast<double>(q.size()));
  }
  rep.samples = all.size();
  if (!all.empty()) {
    double sum = 0.0;
    for (double x : all) sum += x;
    rep.mean_ms = sum / static_cast<double>(all.size());
    rep.std_ms = sample_sd(all);
  }
  return rep;
}

std::pair<RunResult, TimingReport> timed_search(const ExactIndex& index,
                                                const EmbeddingSet& queries,
                                                std::size_t k,
                                                std::size_t repeats,
                                                std::string method_name) {
  if (repeats < 1) fail(Errc::InvalidArgument, "repeats must be >= 1");
  if (queries.dim() != index.dim()) {
    fail(Errc::DimMismatch, "query set dim does not match index");
  }
  RunResult run;
  run.method_name = std::move(method_name);
  run.metric = index.metric();
  run.k_max = k;
  run.lists.resize(queries.size());

  run.timings_ns = time_each_query(
      queries.size(), repeats,
      [&](std::size_t i) { return search(index, queries.row(i), k, queries.ids()[i]); },
      [&](std::size_t i, RankedList list) { run.lists[i] = std::move(list); });
  auto report = summarize_timings(run.timings_ns, repeats,
                                  timing_noise(kNoiseRepeats));
  return {std::move(run), std::move(report)};
}

double timing_noise(std::size_t repeats) {
  if (repeats < 2) fail(Errc::InvalidArgument, "timing_noise needs repeats >= 2");
  std::vector<double> ms(repeats);
  for (std::size_t r = 0; r < repeats; ++r) {
    detail::compiler_barrier();
    const auto t0 = Clock::now();
    detail::compiler_barrier();
    const auto t1 = Clock::now();
    ms[r] = static_cast<double>(elapsed_ns(t0, t1)) * 1e-6;
  }
  return sample_sd(ms);
}

}  // namespace cbir
