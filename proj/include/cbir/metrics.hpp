#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "cbir/index.hpp"
#include "cbir/store.hpp"

namespace cbir {

/// Exact-label-match relevance over a fixed database.
class RelevanceJudger {
 public:
  explicit RelevanceJudger(std::vector<int> database_labels);
  explicit RelevanceJudger(const EmbeddingSet& database)
      : RelevanceJudger(database.labels()) {}

  bool relevant(std::size_t row, int query_label) const {
    return labels_.at(row) == query_label;
  }
  /// R_q: database items sharing the label.
  std::size_t relevant_count(int label) const;
  const std::vector<int>& database_labels() const noexcept { return labels_; }
  const std::map<int, std::size_t>& relevant_count_per_class() const noexcept {
    return counts_;
  }

 private:
  std::vector<int> labels_;
  std::map<int, std::size_t> counts_;
};

double precision_at_k(const RankedList& list, int query_label,
                      const RelevanceJudger& judger, std::size_t k);
/// 0 when the class has no database items.
double recall_at_k(const RankedList& list, int query_label,
                   const RelevanceJudger& judger, std::size_t k);
/// Binary gains, 1/log2(i+1) discount, ideal DCG truncated at min(k, R_q).
double ndcg_at_k(const RankedList& list, int query_label,
                 const RelevanceJudger& judger, std::size_t k);

enum class MetricFamily { Precision, Recall, Ndcg };
inline constexpr MetricFamily kMetricFamilies[] = {
    MetricFamily::Precision, MetricFamily::Recall, MetricFamily::Ndcg};
std::string_view family_name(MetricFamily f) noexcept;

struct QueryMetrics {
  std::string query_id;
  int query_label = 0;
  std::size_t relevant_in_db = 0;
  // Indexed [k position in K].
  std::vector<double> precision;
  std::vector<double> recall;
  std::vector<double> ndcg;

  const std::vector<double>& family(MetricFamily f) const;
};

struct MetricMeans {
  std::size_t n = 0;
  std::vector<double> precision;
  std::vector<double> recall;
  std::vector<double> ndcg;

  const std::vector<double>& family(MetricFamily f) const;
};

struct EvalTable {
  std::string method_name;
  Metric metric = Metric::EuclideanL2;
  std::vector<std::size_t> K;
  std::vector<QueryMetrics> per_query;
  MetricMeans overall;
  std::map<int, MetricMeans> per_class;
  /// Queries whose class has no database representatives.
  std::vector<std::string> zero_relevant_queries;

  /// Column of per-query values for one (family, k).
  std::vector<double> column(MetricFamily f, std::size_t k) const;
  std::size_t k_position(std::size_t k) const;
};

/// query_labels aligned with run.lists.
EvalTable evaluate_run(const RunResult& run,
                       const std::vector<int>& query_labels,
                       const RelevanceJudger& judger,
                       const std::vector<std::size_t>& K);

/// One row per (query, k): query_id,query_label,k,precision,recall,ndcg
std::string render_eval_csv(const EvalTable& table);

}  // namespace cbir
