#include "cbir/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "cbir/error.hpp"

namespace cbir {
namespace {

std::size_t hits_in_top(const RankedList& list, int query_label,
                        const RelevanceJudger& judger, std::size_t k) {
  if (k > list.size()) {
    fail(Errc::KExceedsList, "k=" + std::to_string(k) + " but list has " +
                                 std::to_string(list.size()) + " entries");
  }
  std::size_t hits = 0;
  for (std::size_t i = 0; i < k; ++i) {
    if (judger.relevant(list.neighbor_rows[i], query_label)) ++hits;
  }
  return hits;
}

void accumulate(MetricMeans& m, const QueryMetrics& q) {
  if (m.precision.empty()) {
    m.precision.assign(q.precision.size(), 0.0);
    m.recall.assign(q.recall.size(), 0.0);
    m.ndcg.assign(q.ndcg.size(), 0.0);
  }
  ++m.n;
  for (std::size_t i = 0; i < q.precision.size(); ++i) {
    m.precision[i] += q.precision[i];
    m.recall[i] += q.recall[i];
    m.ndcg[i] += q.ndcg[i];
  }
}

void finish(MetricMeans& m) {
  if (m.n == 0) return;
  const double inv = 1.0 / static_cast<double>(m.n);
  for (auto* v : {&m.precision, &m.recall, &m.ndcg}) {
    for (double& x : *v) x *= inv;
  }
}

}  // namespace

RelevanceJudger::RelevanceJudger(std::vector<int> database_labels)
    : labels_(std::move(database_labels)) {
  for (int l : labels_) ++counts_[l];
}

std::size_t RelevanceJudger::relevant_count(int label) const {
  const auto it = counts_.find(label);
  return it == counts_.end() ? 0 : it->second;
}

double precision_at_k(const RankedList& list, int query_label,
                      const RelevanceJudger& judger, std::size_t k) {
  if (k == 0) fail(Errc::KOutOfRange, "precision_at_k: k must be >= 1");
  return static_cast<double>(hits_in_top(list, query_label, judger, k)) /
         static_cast<double>(k);
}

double recall_at_k(const RankedList& list, int query_label,
                   const RelevanceJudger& judger, std::size_t k) {
  const std::size_t hits = hits_in_top(list, query_label, judger, k);
  const std::size_t r = judger.relevant_count(query_label);
  if (r == 0) return 0.0;
  return static_cast<double>(hits) / static_cast<double>(r);
}

double ndcg_at_k(const RankedList& list, int query_label,
                 const RelevanceJudger& judger, std::size_t k) {
  if (k > list.size()) {
    fail(Errc::KExceedsList, "k=" + std::to_string(k) + " but list has " +
                                 std::to_string(list.size()) + " entries");
  }
  const std::size_t r = judger.relevant_count(query_label);
  if (r == 0) return 0.0;
  double dcg = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    if (judger.relevant(list.neighbor_rows[i], query_label)) {
      dcg += 1.0 / std::log2(static_cast<double>(i) + 2.0);
    }
  }
  double idcg = 0.0;
  for (std::size_t i = 0; i < std::min(k, r); ++i) {
    idcg += 1.0 / std::log2(static_cast<double>(i) + 2.0);
  }
  return idcg > 0.0 ? dcg / idcg : 0.0;
}

std::string_view family_name(MetricFamily f) noexcept {
  switch (f) {
    case MetricFamily::Precision: return "precision";
    case MetricFamily::Recall: return "recall";
    case MetricFamily::Ndcg: return "ndcg";
  }
  return "?";
}

const std::vector<double>& QueryMetrics::family(MetricFamily f) const {
  switch (f) {
    case MetricFamily::Precision: return precision;
    case MetricFamily::Recall: return recall;
    case MetricFamily::Ndcg: return ndcg;
  }
  return precision;
}

const std::vector<double>& MetricMeans::family(MetricFamily f) const {
  switch (f) {
    case MetricFamily::Precision: return precision;
    case MetricFamily::Recall: return recall;
    case MetricFamily::Ndcg: return ndcg;
  }
  return precision;
}

std::size_t EvalTable::k_position(std::size_t k) const {
  const auto it = std::find(K.begin(), K.end(), k);
  if (it == K.end()) {
    fail(Errc::InvalidArgument, "k=" + std::to_string(k) + " not evaluated");
  }
  return static_cast<std::size_t>(it - K.begin());
}

std::vector<double> EvalTable::column(MetricFamily f, std::size_t k) const {
  const std::size_t pos = k_position(k);
  std::vector<double> out;
  out.reserve(per_query.size());
  for (const auto& q : per_query) out.push_back(q.family(f)[pos]);
  return out;
}

EvalTable evaluate_run(const RunResult& run,
                       const std::vector<int>& query_labels,
                       const RelevanceJudger& judger,
                       const std::vector<std::size_t>& K) {
  if (query_labels.size() != run.lists.size()) {
    fail(Errc::CountMismatch, "evaluate_run: labels do not match query count");
  }
  if (K.empty()) fail(Errc::InvalidArgument, "evaluate_run: empty k list");
  EvalTable table;
  table.method_name = run.method_name;
  table.metric = run.metric;
  table.K = K;
  table.per_query.reserve(run.lists.size());
  for (std::size_t i = 0; i < run.lists.size(); ++i) {
    const RankedList& list = run.lists[i];
    const int label = query_labels[i];
    QueryMetrics q;
    q.query_id = list.query_id;
    q.query_label = label;
    q.relevant_in_db = judger.relevant_count(label);
    try {
      for (std::size_t k : K) {
        q.precision.push_back(precision_at_k(list, label, judger, k));
        q.recall.push_back(recall_at_k(list, label, judger, k));
        q.ndcg.push_back(ndcg_at_k(list, label, judger, k));
      }
    } catch (const Error& e) {
      throw Error(e.code(), "query " + list.query_id + ": " + e.what());
    }
    if (q.relevant_in_db == 0) table.zero_relevant_queries.push_back(q.query_id);
    accumulate(table.overall, q);
    accumulate(table.per_class[label], q);
    table.per_query.push_back(std::move(q));
  }
  finish(table.overall);
  for (auto& [label, m] : table.per_class) finish(m);
  return table;
}

std::string render_eval_csv(const EvalTable& table) {
  std::string buf = "query_id,query_label,k,precision,recall,ndcg\n";
  char line[256];
  for (const auto& q : table.per_query) {
    for (std::size_t i = 0; i < table.K.size(); ++i) {
      std::snprintf(line, sizeof line, ",%d,%zu,%.6g,%.6g,%.6g\n", q.query_label,
                    table.K[i], q.precision[i], q.recall[i], q.ndcg[i]);
      buf += q.query_id;
      buf += line;
    }
  }
  return buf;
}

}  // namespace cbir
