#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cbir/store.hpp"

namespace cbir {

enum class Metric { EuclideanL2, InnerProduct };

std::string_view metric_name(Metric m) noexcept;   // "l2" / "ip"
std::string_view metric_label(Metric m) noexcept;  // "FlatL2" / "FlatIP"
Metric parse_metric(std::string_view text);

/// True when score a ranks ahead of score b under metric m.
constexpr bool better(Metric m, double a, double b) noexcept {
  return m == Metric::EuclideanL2 ? a < b : a > b;
}

/// Top-k answer for one query. L2 scores are squared distances
/// (ascending); IP scores are dot products (descending). Equal scores are
/// ordered by database row.
struct RankedList {
  std::string query_id;
  std::vector<std::size_t> neighbor_rows;
  std::vector<std::string> neighbor_ids;
  std::vector<double> scores;

  std::size_t size() const noexcept { return neighbor_rows.size(); }
  bool operator==(const RankedList&) const = default;
};

struct RunResult {
  std::string method_name;
  Metric metric = Metric::EuclideanL2;
  std::size_t k_max = 0;
  std::vector<RankedList> lists;
  /// Per query, one duration per repeat, nanoseconds. Empty when untimed.
  std::vector<std::vector<std::int64_t>> timings_ns;
};

/// Immutable exhaustive index over a shared database.
class ExactIndex {
 public:
  ExactIndex(std::shared_ptr<const EmbeddingSet> database, Metric metric);

  const EmbeddingSet& database() const noexcept { return *database_; }
  std::shared_ptr<const EmbeddingSet> database_ptr() const noexcept {
    return database_;
  }
  Metric metric() const noexcept { return metric_; }
  std::size_t size() const noexcept { return database_->size(); }
  std::size_t dim() const noexcept { return database_->dim(); }

 private:
  std::shared_ptr<const EmbeddingSet> database_;
  Metric metric_;
};

/// Throws UnnormalizedForIP for InnerProduct over an unnormalized set.
ExactIndex build_index(std::shared_ptr<const EmbeddingSet> database,
                       Metric metric);

/// Raw scores of one query against every database row, in row order,
/// through the active SIMD kernels.
std::vector<double> score_all(const ExactIndex& index,
                              std::span<const float> query);

/// Stable top-k of a full score vector.
RankedList select_top_k(const EmbeddingSet& database, Metric metric,
                        std::span<const double> scores, std::size_t k,
                        std::string query_id = {});

RankedList search(const ExactIndex& index, std::span<const float> query,
                  std::size_t k, std::string query_id = {});

/// Reference full scan: scalar double loop and a full stable sort. Shares
/// no code with search().
RankedList naive_search(const EmbeddingSet& database, Metric metric,
                        std::span<const float> query, std::size_t k,
                        std::string query_id = {});

/// lists[i] == search(index, queries.row(i), k). threads > 1 splits queries
/// across workers; output order is query order regardless.
RunResult search_batch(const ExactIndex& index, const EmbeddingSet& queries,
                       std::size_t k, std::string method_name = {},
                       unsigned threads = 1);

}  // namespace cbir
