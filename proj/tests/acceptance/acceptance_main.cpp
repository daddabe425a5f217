// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cbir/config.hpp"
#include "cbir/fusion.hpp"
#include "cbir/index.hpp"
#include "cbir/metrics.hpp"
#include "cbir/pipeline.hpp"
#include "cbir/report.hpp"
#include "cbir/splitter.hpp"
#include "cbir/stats.hpp"
#include "cbir/store.hpp"
#include "cbir/timing.hpp"

using namespace cbir;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<std::string> make_ids(std::size_t n, const std::string& prefix) {
  std::vector<std::string> ids(n);
  for (std::size_t i = 0; i < n; ++i) ids[i] = prefix + std::to_string(i);
  return ids;
}

EmbeddingSet gaussian_set(std::size_t n, std::size_t d, std::mt19937_64& gen,
                          const std::string& prefix, std::vector<int> labels = {}) {
  std::normal_distribution<float> g;
  std::vector<float> m(n * d);
  for (auto& v : m) v = g(gen);
  if (labels.empty()) {
    labels.resize(n);
    for (std::size_t i = 0; i < n; ++i) labels[i] = 1 + static_cast<int>(i % 6);
  }
  return EmbeddingSet(make_ids(n, prefix), std::move(labels), std::move(m), d);
}

std::vector<int> labels_from_counts(const std::vector<std::size_t>& counts) {
  std::vector<int> labels;
  for (std::size_t c = 0; c < counts.size(); ++c)
    labels.insert(labels.end(), counts[c], static_cast<int>(c) + 1);
  return labels;
}

// Recall identity bookkeeping, fed by every synthetic evaluation below.
struct IdentityTally {
  std::size_t checks = 0;
  std::size_t violations = 0;
  std::size_t runs = 0;
};
IdentityTally g_identity;

EvalTable evaluate_checked(const RunResult& run, const EmbeddingSet& queries,
                           const RelevanceJudger& judger, const std::vector<std::size_t>& K) {
  const EvalTable table = evaluate_run(run, queries.labels(), judger, K);
  ++g_identity.runs;
  for (std::size_t q = 0; q < table.per_query.size(); ++q) {
    const auto& m = table.per_query[q];
    if (m.relevant_in_db == 0) continue;
    for (std::size_t ki = 0; ki < K.size(); ++ki) {
      const std::size_t k = K[ki];
      std::size_t hits = 0;
      const auto& rows = run.lists[q].neighbor_rows;
      for (std::size_t r = 0; r < std::min(k, rows.size()); ++r)
        hits += judger.relevant(rows[r], m.query_label);
      const double p_hits = m.precision[ki] * static_cast<double>(k);
      const double r_hits = m.recall[ki] * static_cast<double>(m.relevant_in_db);
      const bool ok = std::llround(p_hits) == static_cast<long long>(hits) &&
                      std::llround(r_hits) == static_cast<long long>(hits) &&
                      m.precision[ki] == static_cast<double>(hits) / static_cast<double>(k) &&
                      m.recall[ki] ==
                          static_cast<double>(hits) / static_cast<double>(m.relevant_in_db);
      ++g_identity.checks;
      g_identity.violations += !ok;
    }
  }
  return table;
}

Outcome oracle_equivalence() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 gen(1001);
  std::size_t lists = 0, id_mismatch = 0;
  double worst = 0.0;
  for (int inst = 0; inst < 200; ++inst) {
    const std::size_t n_db = 1 + gen() % 100, d = 1 + gen() % 64;
    const std::size_t k = 1 + gen() % std::min<std::size_t>(20, n_db);
    const Metric metric = inst % 2 ? Metric::InnerProduct : Metric::EuclideanL2;
    auto raw = gaussian_set(n_db, d, gen, "d");
    auto db = std::make_shared<const EmbeddingSet>(
        metric == Metric::InnerProduct ? l2_normalize(raw) : std::move(raw));
    const auto qs = gaussian_set(10, d, gen, "q");
    const auto index = build_index(db, metric);
    for (std::size_t i = 0; i < qs.size(); ++i) {
      const auto fast = search(index, qs.row(i), k);
      const auto slow = naive_search(*db, metric, qs.row(i), k);
      ++lists;
      if (fast.neighbor_ids != slow.neighbor_ids || fast.size() != slow.size()) {
        ++id_mismatch;
        continue;
      }
      for (std::size_t r = 0; r < fast.size(); ++r)
        worst = std::max(worst, std::abs(fast.scores[r] - slow.scores[r]));
    }
  }
  const double secs = seconds_since(t0);
  return {id_mismatch == 0 && worst <= 1e-5 && secs < 10.0,
          fmt("200 instances, %zu lists, id mismatches %zu, max score diff %.2e, %.2fs", lists,
              id_mismatch, worst, secs)};
}

Outcome metric_duality() {
  std::mt19937_64 gen(1002);
  std::size_t queries = 0, differing = 0;
  for (int inst = 0; inst < 50; ++inst) {
    const std::size_t n_db = 5 + gen() % 96, d = 2 + gen() % 63;
    const std::size_t k = 1 + gen() % std::min<std::size_t>(20, n_db);
    auto db = std::make_shared<const EmbeddingSet>(l2_normalize(gaussian_set(n_db, d, gen, "d")));
    const auto qs = l2_normalize(gaussian_set(10, d, gen, "q"));
    const auto l2 = search_batch(build_index(db, Metric::EuclideanL2), qs, k);
    const auto ip = search_batch(build_index(db, Metric::InnerProduct), qs, k);
    for (std::size_t i = 0; i < qs.size(); ++i) {
      ++queries;
      differing += l2.lists[i].neighbor_ids != ip.lists[i].neighbor_ids;
    }
  }
  return {differing == 0, fmt("50 instances, %zu queries, %zu rankings differ", queries, differing)};
}

Outcome random_baseline() {
  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<std::size_t> db_counts{80, 47, 26, 45, 51, 2};
  const std::vector<std::size_t> q_counts{240, 100, 56, 96, 108, 2};
  const double n_db = 251.0, n_q = 602.0;
  double analytic = 0.0;
  for (std::size_t c = 0; c < 6; ++c)
    analytic += static_cast<double>(q_counts[c]) / n_q * static_cast<double>(db_counts[c]) / n_db;

  std::mt19937_64 gen(1003);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  const std::size_t d = 64;
  const auto uniform_set = [&](const std::vector<std::size_t>& counts, const std::string& prefix) {
    auto labels = labels_from_counts(counts);
    const std::size_t n = labels.size();
    std::vector<float> m(n * d);
    for (auto& v : m) v = u(gen);
    return EmbeddingSet(make_ids(n, prefix), std::move(labels), std::move(m), d);
  };
  double sum = 0.0;
  std::size_t total = 0;
  for (int rep = 0; rep < 10; ++rep) {
    auto db = std::make_shared<const EmbeddingSet>(uniform_set(db_counts, "d"));
    const auto qs = uniform_set(q_counts, "q");
    const auto run = search_batch(build_index(db, Metric::EuclideanL2), qs, 10);
    const auto table = evaluate_checked(run, qs, RelevanceJudger(*db), {1, 5, 10});
    for (double p : table.column(MetricFamily::Precision, 10)) sum += p;
    total += qs.size();
  }
  const double mean = sum / static_cast<double>(total);
  const double secs = seconds_since(t0);
  return {total >= 5000 && std::abs(mean - analytic) <= 0.01 && mean > 0.20 && secs < 60.0,
          fmt("%zu queries, mean P@10 %.5f, analytic %.5f, naive 5-class 0.20000, %.2fs", total,
              mean, analytic, secs)};
}

Outcome separable_clusters() {
  const std::vector<double> levels{8.0, 3.0, 1.5, 0.75, 0.25};
  const std::size_t d = 16, per_class = 40, classes = 5;
  std::vector<double> p10, n10;
  for (double sep : levels) {
    // Same noise at every level, so only the separation changes.
    std::mt19937_64 gen(1004);
    std::normal_distribution<float> g;
    const auto cluster_set = [&](const std::string& prefix) {
      std::vector<int> labels;
      std::vector<float> m;
      for (std::size_t c = 0; c < classes; ++c) {
        for (std::size_t i = 0; i < per_class; ++i) {
          labels.push_back(static_cast<int>(c) + 1);
          for (std::size_t j = 0; j < d; ++j)
            m.push_back(g(gen) + (j == c ? static_cast<float>(sep) : 0.0f));
        }
      }
      const std::size_t n = labels.size();
      return EmbeddingSet(make_ids(n, prefix), std::move(labels), std::move(m), d);
    };
    auto db = std::make_shared<const EmbeddingSet>(cluster_set("d"));
    const auto qs = cluster_set("q");
    const auto run = search_batch(build_index(db, Metric::EuclideanL2), qs, 20);
    const auto table = evaluate_checked(run, qs, RelevanceJudger(*db), {1, 5, 10, 20});
    const std::size_t pos = table.k_position(10);
    p10.push_back(table.overall.precision[pos]);
    n10.push_back(table.overall.ndcg[pos]);
  }
  bool monotone = true;
  for (std::size_t i = 1; i < p10.size(); ++i) monotone &= p10[i] < p10[i - 1];
  std::string curve;
  for (std::size_t i = 0; i < levels.size(); ++i)
    curve += fmt("%s%.2f:%.3f", i ? " " : "", levels[i], p10[i]);
  return {p10[0] >= 0.95 && n10[0] >= 0.95 && monotone,
          fmt("P@10 %.4f NDCG@10 %.4f at widest separation; P@10 by separation %s", p10[0],
              n10[0], curve.c_str())};
}

Outcome recall_identity() {
  return {g_identity.checks > 0 && g_identity.violations == 0,
          fmt("%zu runs, %zu (query, k) checks, %zu violations", g_identity.runs,
              g_identity.checks, g_identity.violations)};
}

Outcome split_fidelity() {
  const std::vector<std::size_t> sizes{801, 333, 187, 319, 358, 8};
  const std::vector<std::size_t> target{240, 100, 56, 96, 108, 2};
  const auto dir = fs::temp_directory_path() / "cbir_acceptance_split";
  fs::remove_all(dir);
  fs::create_directories(dir);
  {
    std::ofstream m(dir / "manifest.csv");
    m << "item_id,label\n";
    for (std::size_t c = 0; c < sizes.size(); ++c)
      for (std::size_t i = 0; i < sizes[c]; ++i) m << "img" << c << '_' << i << ',' << c + 1 << '\n';
  }
  std::ostringstream log;
  const auto a = run_split(dir / "manifest.csv", SplitRatios{}, 42, dir / "a.csv", log);
  run_split(dir / "manifest.csv", SplitRatios{}, 42, dir / "b.csv", log);
  const auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
  };
  const bool identical = slurp(dir / "a.csv") == slurp(dir / "b.csv");
  bool within = true;
  std::string row;
  for (std::size_t c = 0; c < sizes.size(); ++c) {
    const std::size_t got = a.per_class_counts.at(static_cast<int>(c) + 1)[2];
    within &= (got > target[c] ? got - target[c] : target[c] - got) <= 1;
    row += fmt("%s%zu", c ? "," : "", got);
  }
  fs::remove_all(dir);
  return {within && identical,
          fmt("test row (%s) vs (240,100,56,96,108,2); repeated seed-42 output %s", row.c_str(),
              identical ? "byte-identical" : "differs")};
}

std::vector<double> normal_sample(std::size_t n, double mu, double sd, std::mt19937_64& gen) {
  std::normal_distribution<double> g(mu, sd);
  std::vector<double> v(n);
  for (auto& x : v) x = g(gen);
  return v;
}

double enumerated_mwu_p(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> pooled(a);
  pooled.insert(pooled.end(), b.begin(), b.end());
  const std::size_t n = pooled.size(), na = a.size();
  const auto u_of = [&](unsigned mask) {
    double u = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!(mask >> i & 1u)) continue;
      for (std::size_t j = 0; j < n; ++j) {
        if (mask >> j & 1u) continue;
        u += pooled[i] > pooled[j] ? 1.0 : pooled[i] == pooled[j] ? 0.5 : 0.0;
      }
    }
    return u;
  };
  const double observed = u_of((1u << na) - 1u);
  std::size_t total = 0, le = 0, ge = 0;
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    if (static_cast<std::size_t>(__builtin_popcount(mask)) != na) continue;
    const double u = u_of(mask);
    ++total;
    le += u <= observed;
    ge += u >= observed;
  }
  return std::min(1.0, 2.0 * static_cast<double>(std::min(le, ge)) / static_cast<double>(total));
}

Outcome stats_suite() {
  std::mt19937_64 gen(1005);

  // (a) coverage of the true mean.
  const double mu = 0.3;
  std::size_t covered = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const auto xs = normal_sample(100, mu, 0.2, gen);
    const auto ci = stats::bootstrap_ci(xs, 1000, 0.95, static_cast<std::uint64_t>(trial));
    covered += ci.ci_low <= mu && mu <= ci.ci_high;
  }
  const double coverage = static_cast<double>(covered) / 500.0;
  const bool a_ok = coverage >= 0.92 && coverage <= 0.98;

  // (b) every split of 10 distinct values into 5 + 5.
  std::size_t cases = 0, b_bad = 0;
  for (unsigned mask = 0; mask < 1024; ++mask) {
    if (__builtin_popcount(mask) != 5) continue;
    std::vector<double> x, y;
    for (int i = 0; i < 10; ++i) (mask >> i & 1u ? x : y).push_back(i + 1.0);
    const auto r = stats::mann_whitney_u(x, y);
    b_bad += !r.exact || std::abs(r.p_value - enumerated_mwu_p(x, y)) > 1e-12;
    ++cases;
  }
  const bool b_ok = cases == 252 && b_bad == 0;

  // (c) paired t and Cohen's d against the textbook formulas.
  double worst_t = 0.0, worst_d = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 3 + gen() % 60;
    const auto x = normal_sample(n, 0.3, 1.0, gen), y = normal_sample(n, 0.0, 1.0, gen);
    const double nn = static_cast<double>(n);
    double md = 0, ss = 0, mx = 0, my = 0, vx = 0, vy = 0;
    for (std::size_t i = 0; i < n; ++i) md += (x[i] - y[i]) / nn;
    for (std::size_t i = 0; i < n; ++i) ss += (x[i] - y[i] - md) * (x[i] - y[i] - md);
    const double t = md / std::sqrt(ss / (nn - 1) / nn);
    for (std::size_t i = 0; i < n; ++i) mx += x[i] / nn, my += y[i] / nn;
    for (std::size_t i = 0; i < n; ++i)
      vx += (x[i] - mx) * (x[i] - mx), vy += (y[i] - my) * (y[i] - my);
    const double d = (mx - my) / std::sqrt((vx + vy) / (2 * nn - 2));
    worst_t = std::max(worst_t, std::abs(stats::paired_t_test(x, y).statistic - t));
    worst_d = std::max(worst_d, std::abs(stats::cohens_d(x, y) - d));
  }
  const bool c_ok = worst_t <= 1e-6 && worst_d <= 1e-6;

  // (d) per-query P@10 of two methods whose true means differ by 0.06.
  std::vector<double> base(602), better(602);
  std::uniform_real_distribution<double> spread(0.1, 0.5);
  for (std::size_t q = 0; q < 602; ++q) {
    const double p = spread(gen);
    std::binomial_distribution<int> lo(10, p), hi(10, p + 0.06);
    base[q] = lo(gen) / 10.0;
    better[q] = hi(gen) / 10.0;
  }
  const auto paired = stats::paired_t_test(better, base);
  const double gap = stats::mean(better) - stats::mean(base);
  const bool d_ok = paired.p_value < 0.001 && paired.effect_size_d.has_value();
  const double d_value = paired.effect_size_d.value_or(std::nan(""));

  return {a_ok && b_ok && c_ok && d_ok,
          fmt("(a) coverage %.3f (b) %zu/252 enumeration matches (c) max |dt| %.1e, |dd| %.1e "
              "(d) gap %.4f, t %.2f, p %.2e, d %.3f",
              coverage, cases - b_bad, worst_t, worst_d, gap, paired.statistic, paired.p_value,
              d_value)};
}

Outcome fusion_dims() {
  std::mt19937_64 gen(1006);
  const auto dim_of = [&](const std::vector<std::size_t>& dims) {
    std::vector<EmbeddingSet> sets;
    for (std::size_t d : dims) sets.push_back(gaussian_set(3, d, gen, "x"));
    SetRefs refs(sets.begin(), sets.end());
    return concat_features(refs).dim();
  };
  const std::size_t two = dim_of({1024, 2048});
  const std::size_t mega = dim_of({1024, 2048, 512, 512, 1024, 2048});
  const std::map<std::string, double> validation_p10{
      {"VGG16", 0.2689},
      {"ResNet50", 0.3002},
      {"DenseNet121", 0.2908},
      {"ResNet50_MetricLearning", 0.3318},
      {"DenseNet121_MetricLearning", 0.3342},
      {"ResNet50_AdvancedFT", 0.350332},
      {"DenseNet121_AdvancedFT", 0.350498},
  };
  const auto [first, second] = select_best_two(validation_p10);
  const bool picks = first == "DenseNet121_AdvancedFT" && second == "ResNet50_AdvancedFT";
  return {two == 3072 && mega == 7168 && picks,
          fmt("concat(1024,2048) -> %zu, mega -> %zu, best two: %s + %s", two, mega,
              first.c_str(), second.c_str())};
}

Outcome timing_realism() {
  std::mt19937_64 gen(1007);
  auto db = std::make_shared<const EmbeddingSet>(gaussian_set(281, 3072, gen, "d"));
  const auto qs = gaussian_set(602, 3072, gen, "q");
  const auto index = build_index(db, Metric::EuclideanL2);
  const auto [run, timing] = timed_search(index, qs, 10, 10, "acceptance");
  std::size_t zeros = 0, samples = 0;
  for (const auto& per_query : run.timings_ns) {
    for (auto ns : per_query) zeros += ns <= 0, ++samples;
  }
  for (double ms : timing.per_query_means_ms) zeros += !(ms > 0.0);
  const bool ok = timing.mean_ms > 0.0 && std::isfinite(timing.std_ms) && timing.std_ms >= 0.0 &&
                  std::isfinite(timing.noise_ms) && timing.noise_ms >= 0.0 && zeros == 0 &&
                  samples == 6020;
  return {ok, fmt("mean %.4f ms, std %.4f ms, noise %.6f ms, %zu samples, %zu zero", timing.mean_ms,
                  timing.std_ms, timing.noise_ms, samples, zeros)};
}

Outcome end_to_end_determinism() {
  const auto dir = fs::temp_directory_path() / "cbir_acceptance_e2e";
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::mt19937_64 gen(1008);
  const std::vector<int> db_labels = labels_from_counts({20, 12, 8, 10, 10, 2});
  const std::vector<int> q_labels = labels_from_counts({12, 6, 4, 6, 6, 1});
  for (const auto& [name, d] : std::vector<std::pair<std::string, std::size_t>>{{"a", 16}, {"b", 24}}) {
    save_embedding_set(gaussian_set(db_labels.size(), d, gen, "d", db_labels),
                       dir / (name + "_db.meir"), dir / (name + "_db.csv"));
    save_embedding_set(gaussian_set(q_labels.size(), d, gen, "q", q_labels),
                       dir / (name + "_q.meir"), dir / (name + "_q.csv"));
  }
  std::ofstream(dir / "run.cfg") << "k = 1,5,10\n"
                                    "n_boot = 300\n"
                                    "repeats = 3\n"
                                    "method.A.database = a_db.meir\n"
                                    "method.A.queries = a_q.meir\n"
                                    "method.B.database = b_db.meir\n"
                                    "method.B.queries = b_q.meir\n"
                                    "method.AB.fusion = concat\n"
                                    "method.AB.components = A,B\n"
                                    "method.W.fusion = weighted\n"
                                    "method.W.components = A,B\n";
  const RunConfig cfg = load_config(dir / "run.cfg");
  std::ostringstream log;
  EvalOptions first, second;
  first.out_dir = dir / "one";
  second.out_dir = dir / "two";
  second.parallel = true;
  const auto r1 = run_eval(cfg, first, log);
  const auto r2 = run_eval(cfg, second, log);
  const auto v1 = report::deterministic_view(report::read_json(r1.report_path)).dump();
  const auto v2 = report::deterministic_view(report::read_json(r2.report_path)).dump();
  const bool has_timing = r1.report["methods"][0].contains("timing");
  fs::remove_all(dir);
  return {v1 == v2 && has_timing,
          fmt("%zu methods x %zu queries; reports %s outside timing and timestamp (%zu bytes)",
              r1.n_methods, r1.n_queries, v1 == v2 ? "identical" : "differ", v1.size())};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"oracle_equivalence", oracle_equivalence},
      {"metric_duality", metric_duality},
      {"random_baseline", random_baseline},
      {"separable_clusters", separable_clusters},
      {"recall_identity", recall_identity},
      {"split_fidelity", split_fidelity},
      {"statistics_suite", stats_suite},
      {"fusion_dims", fusion_dims},
      {"timing_realism", timing_realism},
      {"end_to_end_determinism", end_to_end_determinism},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    Outcome out;
    try {
      out = check();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    failed += !out.pass;
    std::cout << (out.pass ? "PASS " : "FAIL ") << name << ": " << out.detail << std::endl;
  }
  std::cout << (failed ? "FAILED " : "ALL PASSED ") << criteria.size() - failed << '/'
            << criteria.size() << std::endl;
  return failed ? 1 : 0;
}
