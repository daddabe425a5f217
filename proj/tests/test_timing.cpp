#include <gtest/gtest.h>

#include <cmath>

#include "cbir/error.hpp"
#include "cbir/timing.hpp"
#include "support.hpp"

using namespace cbir;

TEST(Summarize, MeanAndSampleSd) {
  const std::vector<std::vector<std::int64_t>> ns{{1'000'000, 3'000'000}, {2'000'000, 2'000'000}};
  const auto t = summarize_timings(ns, 2, 0.5);
  EXPECT_DOUBLE_EQ(t.mean_ms, 2.0);
  EXPECT_NEAR(t.std_ms, std::sqrt(2.0 / 3.0), 1e-12);
  EXPECT_EQ(t.noise_ms, 0.5);
  EXPECT_EQ(t.samples, 4u);
  EXPECT_EQ(t.repeats, 2u);
  EXPECT_EQ(t.per_query_means_ms, (std::vector<double>{2.0, 2.0}));
}

TEST(Summarize, SingleSampleHasZeroSd) {
  const auto t = summarize_timings({{5'000}}, 1, 0.0);
  EXPECT_DOUBLE_EQ(t.mean_ms, 0.005);
  EXPECT_EQ(t.std_ms, 0.0);
}

TEST(Noise, NonNegativeAndNeedsTwoRepeats) {
  EXPECT_GE(timing_noise(100), 0.0);
  EXPECT_THROW(timing_noise(1), Error);
}

TEST(TimeEachQuery, KeepsFirstRepeatAndFloorsAtOneNs) {
  std::vector<int> kept(5, -1);
  int calls = 0;
  const auto s = time_each_query(
      5, 3, [&](std::size_t i) { ++calls; return static_cast<int>(i) * 10 + calls; },
      [&](std::size_t i, int v) { kept[i] = v; });
  EXPECT_EQ(calls, 15);
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(kept[i], static_cast<int>(i) * 10 + static_cast<int>(i) * 3 + 1);
    ASSERT_EQ(s[i].size(), 3u);
    for (auto ns : s[i]) EXPECT_GE(ns, 1);
  }
}

TEST(TimedSearch, ResultsMatchUntimedAndTimesArePositive) {
  const auto db = std::make_shared<const EmbeddingSet>(cbir::testing::random_set(50, 16, 1));
  const auto q = cbir::testing::random_set(12, 16, 2, "q");
  const auto idx = build_index(db, Metric::EuclideanL2);
  const auto [run, report] = timed_search(idx, q, 5, 4, "m");
  EXPECT_EQ(run.lists, search_batch(idx, q, 5, "m").lists);
  ASSERT_EQ(run.timings_ns.size(), q.size());
  for (const auto& per : run.timings_ns) {
    ASSERT_EQ(per.size(), 4u);
    for (auto ns : per) EXPECT_GT(ns, 0);
  }
  EXPECT_GT(report.mean_ms, 0.0);
  EXPECT_GE(report.std_ms, 0.0);
  EXPECT_GE(report.noise_ms, 0.0);
  EXPECT_EQ(report.samples, 48u);
}
