#include "cbir/index.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <thread>

#include "cbir/error.hpp"
#include "cbir/kernels.hpp"

namespace cbir {
namespace {

void check_query(const ExactIndex& index, std::span<const float> query,
                 std::size_t k) {
  if (query.size() != index.dim()) {
    fail(Errc::DimMismatch, "query dim " + std::to_string(query.size()) +
                                " != index dim " + std::to_string(index.dim()));
  }
  if (k < 1 || k > index.size()) {
    fail(Errc::KOutOfRange, "k=" + std::to_string(k) + " outside [1, " +
                                std::to_string(index.size()) + "]");
  }
  for (std::size_t i = 0; i < query.size(); ++i) {
    if (!std::isfinite(query[i])) {
      fail(Errc::NonFiniteQuery, "query value " + std::to_string(i));
    }
  }
}

}  // namespace

std::string_view metric_name(Metric m) noexcept {
  return m == Metric::EuclideanL2 ? "l2" : "ip";
}

std::string_view metric_label(Metric m) noexcept {
  return m == Metric::EuclideanL2 ? "FlatL2" : "FlatIP";
}

Metric parse_metric(std::string_view text) {
  if (text == "l2" || text == "L2" || text == "FlatL2") return Metric::EuclideanL2;
  if (text == "ip" || text == "IP" || text == "FlatIP") return Metric::InnerProduct;
  fail(Errc::InvalidArgument, "unknown metric: " + std::string(text));
}

ExactIndex::ExactIndex(std::shared_ptr<const EmbeddingSet> database,
                       Metric metric)
    : database_(std::move(database)), metric_(metric) {
  if (!database_) fail(Errc::InvalidArgument, "null database");
}

ExactIndex build_index(std::shared_ptr<const EmbeddingSet> database,
                       Metric metric) {
  if (!database) fail(Errc::InvalidArgument, "null database");
  if (metric == Metric::InnerProduct && !database->normalized()) {
    fail(Errc::UnnormalizedForIP,
         "inner-product index requires an L2-normalized database");
  }
  return ExactIndex(std::move(database), metric);
}

std::vector<double> score_all(const ExactIndex& index,
                              std::span<const float> query) {
  const auto& db = index.database();
  std::vector<double> scores(db.size());
  const auto& k = kernels::active();
  if (index.metric() == Metric::EuclideanL2) {
    k.l2sqr_many(query.data(), db.matrix().data(), db.size(), db.dim(),
                 scores.data());
  } else {
    k.dot_many(query.data(), db.matrix().data(), db.size(), db.dim(),
               scores.data());
  }
  return scores;
}

RankedList select_top_k(const EmbeddingSet& database, Metric metric,
                        std::span<const double> scores, std::size_t k,
                        std::string query_id) {
  if (scores.size() != database.size()) {
    fail(Errc::RowOrderMismatch, "score vector does not cover the database");
  }
  if (k < 1 || k > scores.size()) {
    fail(Errc::KOutOfRange, "k=" + std::to_string(k));
  }
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto ahead = [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return better(metric, scores[a], scores[b]);
    return a < b;
  };
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k),
                    order.end(), ahead);
  RankedList out;
  out.query_id = std::move(query_id);
  out.neighbor_rows.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
  out.neighbor_ids.reserve(k);
  out.scores.reserve(k);
  for (std::size_t r : out.neighbor_rows) {
    out.neighbor_ids.push_back(database.ids()[r]);
    out.scores.push_back(scores[r]);
  }
  return out;
}

RankedList search(const ExactIndex& index, std::span<const float> query,
                  std::size_t k, std::string query_id) {
  check_query(index, query, k);
  const auto scores = score_all(index, query);
  return select_top_k(index.database(), index.metric(), scores, k,
                      std::move(query_id));
}

RankedList naive_search(const EmbeddingSet& database, Metric metric,
                        std::span<const float> query, std::size_t k,
                        std::string query_id) {
  if (metric == Metric::InnerProduct && !database.normalized()) {
    fail(Errc::UnnormalizedForIP, "naive_search: unnormalized database");
  }
  if (query.size() != database.dim()) fail(Errc::DimMismatch, "naive_search");
  if (k < 1 || k > database.size()) fail(Errc::KOutOfRange, "naive_search");
  for (float v : query) {
    if (!std::isfinite(v)) fail(Errc::NonFiniteQuery, "naive_search");
  }

  struct Scored {
    double score;
    std::size_t row;
  };
  std::vector<Scored> all;
  for (std::size_t r = 0; r < database.size(); ++r) {
    const auto row = database.row(r);
    double s = 0.0;
    for (std::size_t c = 0; c < row.size(); ++c) {
      const double q = query[c];
      const double x = row[c];
      s += metric == Metric::EuclideanL2 ? (q - x) * (q - x) : q * x;
    }
    all.push_back({s, r});
  }
  std::stable_sort(all.begin(), all.end(), [&](const Scored& a, const Scored& b) {
    return better(metric, a.score, b.score);
  });

  RankedList out;
  out.query_id = std::move(query_id);
  for (std::size_t i = 0; i < k; ++i) {
    out.neighbor_rows.push_back(all[i].row);
    out.neighbor_ids.push_back(database.ids()[all[i].row]);
    out.scores.push_back(all[i].score);
  }
  return out;
}

RunResult search_batch(const ExactIndex& index, const EmbeddingSet& queries,
                       std::size_t k, std::string method_name,
                       unsigned threads) {
  if (queries.dim() != index.dim()) {
    fail(Errc::DimMismatch, "query set dim " + std::to_string(queries.dim()) +
                                " != index dim " + std::to_string(index.dim()));
  }
  RunResult out;
  out.method_name = std::move(method_name);
  out.metric = index.metric();
  out.k_max = k;
  out.lists.resize(queries.size());

  const auto run_one = [&](std::size_t i) {
    try {
      out.lists[i] = search(index, queries.row(i), k, queries.ids()[i]);
    } catch (const Error& e) {
      throw Error(e.code(), "query " + std::to_string(i) + " (" +
                                queries.ids()[i] + "): " + e.what());
    }
  };

  const std::size_t n = queries.size();
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n)));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) run_one(i);
    return out;
  }

  std::exception_ptr first_error;
  std::mutex error_mutex;
  {
    std::vector<std::jthread> workers;
    for (unsigned t = 0; t < threads; ++t) {
      workers.emplace_back([&, t] {
        for (std::size_t i = t; i < n; i += threads) {
          try {
            run_one(i);
          } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!first_error) first_error = std::current_exception();
            return;
          }
        }
      });
    }
  }
  if (first_error) std::rethrow_exception(first_error);
  return out;
}

}  // namespace cbir
