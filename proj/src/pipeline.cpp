#include "cbir/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <ostream>
#include <sstream>
#include <thread>

#include "cbir/fusion.hpp"
#include "cbir/index.hpp"
#include "cbir/kernels.hpp"
#include "cbir/metrics.hpp"
#include "cbir/stats.hpp"
#include "cbir/store.hpp"

namespace cbir {

int exit_code_for(Errc code) noexcept {
  switch (code) {
    case Errc::ConfigParse:
    case Errc::InvalidArgument:
      return kExitConfig;
    case Errc::ZeroVariance:
    case Errc::ZeroPooledVariance:
    case Errc::ZeroVector:
      return kExitNumeric;
    default:
      return kExitData;
  }
}

RunConfig apply_overrides(RunConfig config, const Overrides& o) {
  if (o.seed) config.seed = *o.seed;
  if (o.K) config.K = *o.K;
  if (o.metrics) config.metrics = *o.metrics;
  if (config.K.empty()) fail(Errc::InvalidArgument, "k list is empty");
  if (config.metrics.empty()) fail(Errc::InvalidArgument, "metric list is empty");
  return config;
}

SplitAssignment run_split(const std::filesystem::path& manifest_path,
                          const SplitRatios& ratios, std::uint64_t seed,
                          const std::filesystem::path& out_path,
                          std::ostream& log) {
  ratios.validate();
  const Manifest manifest = read_manifest(manifest_path);
  SplitAssignment split = stratified_split(manifest, ratios, seed);
  write_split_csv(out_path, split);
  log << render_split_table(split);
  for (const auto& w : split.warnings) log << "warning: " << w << '\n';
  log << "wrote " << out_path.string() << '\n';
  return split;
}

namespace {

using report::Json;
using report::sig6;
using SetPtr = std::shared_ptr<const EmbeddingSet>;
using MetricKey = std::pair<std::string, Metric>;

constexpr std::size_t kValidationK = 10;

std::string_view method_kind(const MethodConfig& m) {
  return m.fusion ? fusion_mode_name(m.fusion->mode) : "embedding";
}

bool score_level(const MethodConfig& m) {
  return m.fusion && is_score_level(m.fusion->mode);
}

/// Leave-one-out precision@10 of a database against itself.
double self_precision(const ExactIndex& index) {
  const EmbeddingSet& db = index.database();
  const std::size_t n = db.size();
  if (n < 2) return 0.0;
  const std::size_t k = std::min(kValidationK, n - 1);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const RankedList list = search(index, db.row(i), k + 1);
    std::size_t taken = 0, hits = 0;
    for (const std::size_t row : list.neighbor_rows) {
      if (row == i) continue;
      if (taken == k) break;
      ++taken;
      if (db.labels()[row] == db.labels()[i]) ++hits;
    }
    total += static_cast<double>(hits) / static_cast<double>(k);
  }
  return total / static_cast<double>(n);
}

struct Features {
  SetPtr database;
  SetPtr queries;
  std::vector<std::string> components;
  std::optional<PcaModel> pca;
  std::vector<std::string> warnings;
};

/// Loads and derives every method's embedding sets on demand, caching by
/// method name and metric.
class Workspace {
 public:
  Workspace(const RunConfig& config, std::ostream& log)
      : cfg_(config), log_(log), space_(config.labels) {}

  const RunConfig& config() const { return cfg_; }

  const MethodConfig& method(const std::string& name) const {
    const MethodConfig* m = cfg_.find(name);
    if (m == nullptr) fail(Errc::InvalidArgument, "unknown method " + name);
    return *m;
  }

  const Features& features(const std::string& name) {
    if (auto it = features_.find(name); it != features_.end()) return it->second;
    const MethodConfig& m = method(name);
    if (score_level(m)) {
      fail(Errc::InvalidArgument,
           "method " + name + " fuses scores and has no feature matrix");
    }
    Features f = m.fusion ? derive(m) : load(m);
    return features_.emplace(name, std::move(f)).first->second;
  }

  SetPtr database(const std::string& name, Metric metric) {
    return prepared(db_, features(name).database, name, metric);
  }
  SetPtr queries(const std::string& name, Metric metric) {
    return prepared(q_, features(name).queries, name, metric);
  }

  const ExactIndex& index(const std::string& name, Metric metric) {
    const MetricKey key{name, metric};
    if (auto it = index_.find(key); it != index_.end()) return *it->second;
    auto idx = std::make_unique<ExactIndex>(build_index(database(name, metric), metric));
    return *index_.emplace(key, std::move(idx)).first->second;
  }

  double validation_precision(const std::string& name, Metric metric) {
    const MetricKey key{name, metric};
    if (auto it = loo_.find(key); it != loo_.end()) return it->second;
    const double p = self_precision(index(name, metric));
    loo_.emplace(key, p);
    return p;
  }

  Metric validation_metric() const {
    return std::find(cfg_.metrics.begin(), cfg_.metrics.end(), Metric::InnerProduct) !=
                   cfg_.metrics.end()
               ? Metric::InnerProduct
               : Metric::EuclideanL2;
  }

  std::vector<std::string> components(const MethodConfig& m) {
    if (!m.fusion) return {};
    if (!m.auto_components) return m.fusion->components;
    if (auto it = resolved_.find(m.name); it != resolved_.end()) return it->second;

    std::vector<std::string> candidates = m.candidates;
    if (candidates.empty()) {
      for (const auto& other : cfg_.methods) {
        if (other.name == m.name) break;
        if (!other.fusion) candidates.push_back(other.name);
      }
    }
    if (candidates.size() < 2) {
      fail(Errc::TooFewMethods, "method " + m.name + ": auto selection needs >= 2 candidates");
    }
    const Metric metric = validation_metric();
    std::map<std::string, double> scores;
    if (!m.validation.empty()) {
      const Json val = report::read_json(cfg_.resolve(m.validation));
      for (const auto& c : candidates) scores[c] = lookup_validation(val, c, metric);
    } else {
      for (const auto& c : candidates) scores[c] = validation_precision(c, metric);
    }
    const auto [a, b] = select_best_two(scores);
    log_ << "method " << m.name << ": selected " << a << " + " << b << " (validation P@10 "
         << sig6(scores[a]) << ", " << sig6(scores[b]) << ")\n";
    std::vector<std::string> picked{a, b};
    resolved_.emplace(m.name, picked);
    return picked;
  }

 private:
  Features load(const MethodConfig& m) {
    const auto read = [&](const std::string& matrix, const std::string& manifest) {
      const auto mpath = cfg_.resolve(matrix);
      const auto cpath = manifest.empty() ? default_manifest_path(mpath) : cfg_.resolve(manifest);
      return std::make_shared<const EmbeddingSet>(load_embedding_set(mpath, cpath, space_));
    };
    Features f;
    f.database = read(m.database, m.database_manifest);
    f.queries = read(m.queries, m.queries_manifest);
    if (f.database->dim() != f.queries->dim()) {
      fail(Errc::DimMismatch, "method " + m.name + ": database dim " +
                                  std::to_string(f.database->dim()) + ", queries dim " +
                                  std::to_string(f.queries->dim()));
    }
    assert_disjoint(*f.queries, *f.database);
    log_ << "loaded " << m.name << ": " << f.database->size() << " database, "
         << f.queries->size() << " queries, dim " << f.database->dim() << '\n';
    return f;
  }

  Features derive(const MethodConfig& m) {
    Features f;
    f.components = components(m);
    SetRefs dbs, qs;
    for (const auto& c : f.components) {
      const Features& cf = features(c);
      dbs.emplace_back(*cf.database);
      qs.emplace_back(*cf.queries);
    }
    const auto fused = [](const SetRefs& sets) -> SetPtr {
      if (sets.size() == 1) return std::make_shared<const EmbeddingSet>(sets.front().get());
      return std::make_shared<const EmbeddingSet>(concat_features(sets));
    };
    switch (m.fusion->mode) {
      case FusionMode::Concat:
        f.database = fused(dbs);
        f.queries = fused(qs);
        break;
      case FusionMode::FeatureAverage:
        f.database = std::make_shared<const EmbeddingSet>(average_features(dbs));
        f.queries = std::make_shared<const EmbeddingSet>(average_features(qs));
        break;
      case FusionMode::PCA: {
        const SetPtr base_db = fused(dbs);
        const SetPtr base_q = fused(qs);
        std::size_t target = 0;
        if (m.fusion->target_dim) {
          target = *m.fusion->target_dim;
        } else {
          std::size_t smallest = base_db->dim();
          for (const auto& s : dbs) smallest = std::min(smallest, s.get().dim());
          target = std::min({smallest, base_db->size() - 1, base_db->dim()});
          if (target < smallest) {
            f.warnings.push_back("target_dim clamped to " + std::to_string(target) +
                                 " by database size");
          }
          if (target == 0) fail(Errc::TooFewValues, "method " + m.name + ": PCA needs >= 2 rows");
        }
        PcaModel model = pca_fit(*base_db, target);
        for (const auto& w : model.warnings) f.warnings.push_back(w);
        f.database = std::make_shared<const EmbeddingSet>(pca_project(model, *base_db));
        f.queries = std::make_shared<const EmbeddingSet>(pca_project(model, *base_q));
        f.pca = std::move(model);
        break;
      }
      case FusionMode::ScoreWeighted:
      case FusionMode::ScoreAttention:
        fail(Errc::InvalidArgument, "method " + m.name + " is score-level");
    }
    log_ << "fused " << m.name << " (" << fusion_mode_name(m.fusion->mode)
         << "): dim " << f.database->dim() << '\n';
    return f;
  }

  SetPtr prepared(std::map<MetricKey, SetPtr>& cache, const SetPtr& raw,
                  const std::string& name, Metric metric) {
    if (metric == Metric::EuclideanL2 || raw->normalized()) return raw;
    const MetricKey key{name, metric};
    if (auto it = cache.find(key); it != cache.end()) return it->second;
    auto set = std::make_shared<const EmbeddingSet>(l2_normalize(*raw));
    cache.emplace(key, set);
    return set;
  }

  static double lookup_validation(const Json& val, const std::string& name, Metric metric) {
    if (val.contains("methods")) {
      for (const auto& m : val["methods"]) {
        if (m.value("name", "") != name) continue;
        const std::string key = std::string(metric_name(metric));
        try {
          return m.at("results").at(key).at("aggregates").at("precision").at("10").get<double>();
        } catch (const nlohmann::json::exception&) {
          break;
        }
      }
    }
    fail(Errc::InvalidArgument, "validation report has no precision@10 for " + name);
  }

  const RunConfig& cfg_;
  std::ostream& log_;
  LabelSpace space_;
  std::map<std::string, Features> features_;
  std::map<MetricKey, SetPtr> db_, q_;
  std::map<MetricKey, std::unique_ptr<ExactIndex>> index_;
  std::map<MetricKey, double> loo_;
  std::map<std::string, std::vector<std::string>> resolved_;
};

/// One method under one metric: answers query i with its top-k list.
struct Retriever {
  std::string name;
  Metric metric = Metric::EuclideanL2;
  SetPtr queries;
  SetPtr database;
  std::size_t feature_dim = 0;
  std::vector<std::string> components;
  std::vector<std::string> warnings;
  std::optional<std::vector<double>> static_weights;
  bool adaptive_weights = false;
  std::function<RankedList(std::size_t, std::size_t)> query;
};

Retriever make_retriever(Workspace& ws, const MethodConfig& m, Metric metric) {
  Retriever r;
  r.name = m.name;
  r.metric = metric;
  if (!score_level(m)) {
    const Features& f = ws.features(m.name);
    r.components = f.components;
    r.warnings = f.warnings;
    r.queries = ws.queries(m.name, metric);
    const ExactIndex* idx = &ws.index(m.name, metric);
    r.database = idx->database_ptr();
    r.feature_dim = idx->dim();
    const SetPtr q = r.queries;
    r.query = [idx, q](std::size_t i, std::size_t k) {
      return search(*idx, q->row(i), k, q->ids()[i]);
    };
    return r;
  }

  r.components = ws.components(m);
  std::vector<const ExactIndex*> indexes;
  std::vector<SetPtr> queries;
  for (const auto& c : r.components) {
    indexes.push_back(&ws.index(c, metric));
    queries.push_back(ws.queries(c, metric));
    r.feature_dim += indexes.back()->dim();
    if (queries.back()->ids() != queries.front()->ids()) {
      fail(Errc::IdOrderMismatch, "method " + m.name + ": components " +
                                      r.components.front() + " and " + c +
                                      " have different query order");
    }
  }
  r.queries = queries.front();
  r.database = indexes.front()->database_ptr();

  FusionSpec spec = *m.fusion;
  spec.components = r.components;
  if (spec.mode == FusionMode::ScoreAttention) {
    r.adaptive_weights = true;
  } else if (!spec.weights) {
    std::vector<double> val;
    for (const auto& c : r.components) val.push_back(ws.validation_precision(c, ws.validation_metric()));
    spec.weights = proportional_weights(val);
  }
  if (spec.weights) r.static_weights = spec.weights;

  r.query = [indexes, queries, spec, metric](std::size_t i, std::size_t k) {
    std::vector<ScoreInput> inputs;
    inputs.reserve(indexes.size());
    for (std::size_t c = 0; c < indexes.size(); ++c) {
      std::vector<double> s = score_all(*indexes[c], queries[c]->row(i));
      if (metric == Metric::EuclideanL2) {
        for (auto& v : s) v = -v;
      }
      inputs.push_back({&indexes[c]->database(), std::move(s)});
    }
    return score_fusion(inputs, spec, k, queries.front()->ids()[i]).list;
  };
  return r;
}

std::vector<std::vector<Retriever>> make_retrievers(Workspace& ws) {
  const RunConfig& cfg = ws.config();
  if (cfg.methods.empty()) fail(Errc::InvalidArgument, "config declares no methods");
  std::vector<std::vector<Retriever>> out;
  const std::vector<std::string>* query_ids = nullptr;
  for (const auto& m : cfg.methods) {
    std::vector<Retriever> per_metric;
    for (const Metric metric : cfg.metrics) {
      per_metric.push_back(make_retriever(ws, m, metric));
      const auto& ids = per_metric.back().queries->ids();
      if (query_ids == nullptr) {
        query_ids = &per_metric.back().queries->ids();
      } else if (ids != *query_ids) {
        fail(Errc::IdOrderMismatch,
             "method " + m.name + " evaluates a different query list than " +
                 cfg.methods.front().name);
      }
    }
    out.push_back(std::move(per_metric));
  }
  return out;
}

std::size_t max_k(const std::vector<std::size_t>& K) {
  return *std::max_element(K.begin(), K.end());
}

RunResult run_all(const Retriever& r, std::size_t k) {
  RunResult run;
  run.method_name = r.name;
  run.metric = r.metric;
  run.k_max = k;
  const std::size_t n = r.queries->size();
  run.lists.reserve(n);
  for (std::size_t i = 0; i < n; ++i) run.lists.push_back(r.query(i, k));
  return run;
}

TimingReport time_retriever(const Retriever& r, std::size_t k, std::size_t repeats) {
  const auto samples = time_each_query(
      r.queries->size(), repeats, [&](std::size_t i) { return r.query(i, k); },
      [](std::size_t, RankedList&&) {});
  return summarize_timings(samples, repeats, timing_noise(kNoiseRepeats));
}

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string file_stem(const std::string& name) {
  std::string out = name;
  for (char& c : out) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                    c == '-' || c == '_' || c == '.';
    if (!ok) c = '_';
  }
  return out;
}

Json reals(const std::vector<double>& xs) {
  Json a = Json::array();
  for (double x : xs) a.push_back(sig6(x));
  return a;
}

Json by_k(const std::vector<std::size_t>& K, const std::vector<double>& values) {
  Json o = Json::object();
  for (std::size_t i = 0; i < K.size(); ++i) o[std::to_string(K[i])] = sig6(values[i]);
  return o;
}

Json means_json(const std::vector<std::size_t>& K, const MetricMeans& m) {
  Json o = Json::object();
  o["n"] = m.n;
  for (const MetricFamily f : kMetricFamilies) o[std::string(family_name(f))] = by_k(K, m.family(f));
  return o;
}

Json config_echo(const RunConfig& cfg) {
  Json o = Json::object();
  o["seed"] = cfg.seed;
  o["ratios"] = reals({cfg.ratios.train, cfg.ratios.val, cfg.ratios.test});
  Json metrics = Json::array();
  for (const Metric m : cfg.metrics) metrics.push_back(std::string(metric_name(m)));
  o["metrics"] = metrics;
  o["k"] = cfg.K;
  o["repeats"] = cfg.repeats;
  o["n_boot"] = cfg.n_boot;
  o["level"] = sig6(cfg.level);
  o["labels"] = cfg.labels;
  Json methods = Json::array();
  for (const auto& m : cfg.methods) {
    Json e = Json::object();
    e["name"] = m.name;
    e["kind"] = std::string(method_kind(m));
    if (!m.fusion) {
      e["database"] = m.database;
      e["queries"] = m.queries;
    } else {
      if (m.auto_components) {
        e["components"] = "auto";
        e["candidates"] = m.candidates;
        if (!m.validation.empty()) e["validation"] = m.validation;
      } else {
        e["components"] = m.fusion->components;
      }
      if (m.fusion->weights) e["weights"] = reals(*m.fusion->weights);
      if (m.fusion->target_dim) e["target_dim"] = *m.fusion->target_dim;
    }
    methods.push_back(std::move(e));
  }
  o["methods"] = methods;
  return o;
}

struct Evaluated {
  EvalTable table;
  std::map<MetricFamily, std::vector<std::optional<stats::BootstrapResult>>> boot;
};

Evaluated evaluate(const Retriever& r, const RunConfig& cfg) {
  const RunResult run = run_all(r, max_k(cfg.K));
  Evaluated e;
  e.table = evaluate_run(run, r.queries->labels(), RelevanceJudger(*r.database), cfg.K);
  for (const MetricFamily f : kMetricFamilies) {
    auto& slot = e.boot[f];
    for (const std::size_t k : cfg.K) {
      const auto col = e.table.column(f, k);
      if (col.size() < 2) {
        slot.emplace_back();
      } else {
        slot.push_back(stats::bootstrap_ci(col, cfg.n_boot, cfg.level, cfg.seed));
      }
    }
  }
  return e;
}

Json results_json(const Retriever& r, const Evaluated& e, const RunConfig& cfg) {
  Json o = Json::object();
  o["index"] = std::string(metric_label(r.metric));
  o["n_queries"] = e.table.per_query.size();
  o["n_database"] = r.database->size();
  o["aggregates"] = means_json(cfg.K, e.table.overall);
  Json per_class = Json::object();
  for (const auto& [label, m] : e.table.per_class) per_class[std::to_string(label)] = means_json(cfg.K, m);
  o["per_class"] = per_class;
  Json boot = Json::object();
  for (const MetricFamily f : kMetricFamilies) {
    Json fam = Json::object();
    const auto& slot = e.boot.at(f);
    for (std::size_t i = 0; i < cfg.K.size(); ++i) {
      const auto& b = slot[i];
      if (!b) {
        fam[std::to_string(cfg.K[i])] = nullptr;
        continue;
      }
      fam[std::to_string(cfg.K[i])] = Json{{"mean", sig6(b->point_mean)},
                                           {"ci_low", sig6(b->ci_low)},
                                           {"ci_high", sig6(b->ci_high)},
                                           {"n", b->n},
                                           {"n_boot", b->n_boot},
                                           {"level", sig6(b->level)},
                                           {"seed", b->seed}};
    }
    boot[std::string(family_name(f))] = fam;
  }
  o["bootstrap"] = boot;
  o["zero_relevant_queries"] = e.table.zero_relevant_queries;
  if (r.adaptive_weights) {
    o["fusion_weights"] = "per-query";
  } else if (r.static_weights) {
    o["fusion_weights"] = reals(*r.static_weights);
  }
  return o;
}

Json timing_json(const TimingReport& t) {
  return Json{{"mean_ms", sig6(t.mean_ms)},
              {"std_ms", sig6(t.std_ms)},
              {"noise_ms", sig6(t.noise_ms)},
              {"repeats", t.repeats},
              {"samples", t.samples},
              {"kernel_isa", std::string(kernels::isa_name(kernels::active().isa))}};
}

std::size_t pairwise_k(const std::vector<std::size_t>& K) {
  return std::find(K.begin(), K.end(), std::size_t{10}) != K.end() ? 10 : max_k(K);
}

Json pairwise_json(const std::string& metric, std::size_t k, const std::string& a_name,
                   const std::string& b_name, const std::vector<double>& a,
                   const std::vector<double>& b) {
  Json o = Json::object();
  o["metric"] = metric;
  o["k"] = k;
  o["a"] = a_name;
  o["b"] = b_name;
  o["n"] = a.size();
  std::vector<std::string> notes;
  const auto guarded = [&](const char* what, auto&& compute) -> Json {
    try {
      return sig6(compute());
    } catch (const Error& e) {
      notes.push_back(std::string(what) + ": " + e.what());
      return nullptr;
    }
  };
  o["t"] = nullptr;
  o["p_t"] = nullptr;
  try {
    const auto t = stats::paired_t_test(a, b);
    o["t"] = sig6(t.statistic);
    o["p_t"] = sig6(t.p_value);
  } catch (const Error& e) {
    notes.push_back(std::string("t: ") + e.what());
  }
  o["U"] = nullptr;
  o["p_u"] = nullptr;
  try {
    const auto u = stats::mann_whitney_u(a, b);
    o["U"] = sig6(u.statistic);
    o["p_u"] = sig6(u.p_value);
  } catch (const Error& e) {
    notes.push_back(std::string("U: ") + e.what());
  }
  o["d"] = guarded("d", [&] { return stats::cohens_d(a, b); });
  if (!notes.empty()) o["notes"] = notes;
  return o;
}

template <typename Fn>
void for_each_maybe_parallel(std::size_t n, bool parallel, Fn&& fn) {
  if (!parallel || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(n);
  {
    std::vector<std::jthread> workers;
    workers.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      workers.emplace_back([&, i] {
        try {
          fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      });
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace

FuseOutcome run_fuse(const RunConfig& config, const std::string& name,
                     const std::filesystem::path& out_dir, std::ostream& log) {
  Workspace ws(config, log);
  const MethodConfig& m = ws.method(name);
  if (!m.fusion || score_level(m)) {
    fail(Errc::InvalidArgument, "method " + name + " is not a feature-level fusion");
  }
  const Features* f = nullptr;
  try {
    f = &ws.features(name);
  } catch (const Error& e) {
    throw Error(e.code(), "fusion " + name + ": " + e.what());
  }
  std::filesystem::create_directories(out_dir);
  FuseOutcome out;
  const std::string stem = file_stem(name);
  out.database_matrix = out_dir / (stem + "_database.meir");
  out.queries_matrix = out_dir / (stem + "_queries.meir");
  save_embedding_set(*f->database, out.database_matrix, default_manifest_path(out.database_matrix));
  save_embedding_set(*f->queries, out.queries_matrix, default_manifest_path(out.queries_matrix));
  if (f->pca) {
    out.pca_prefix = out_dir / (stem + "_pca");
    save_pca_model(*f->pca, *out.pca_prefix);
  }
  out.components = f->components;
  out.dim = f->database->dim();
  for (const auto& w : f->warnings) log << "warning: " << w << '\n';
  log << "wrote " << out.database_matrix.string() << " (" << f->database->size() << " x "
      << out.dim << ")\n";
  log << "wrote " << out.queries_matrix.string() << " (" << f->queries->size() << " x "
      << out.dim << ")\n";
  return out;
}

EvalOutcome run_eval(const RunConfig& config, const EvalOptions& options, std::ostream& log) {
  if (config.K.empty()) fail(Errc::InvalidArgument, "k list is empty");
  if (config.metrics.empty()) fail(Errc::InvalidArgument, "metric list is empty");
  Workspace ws(config, log);
  const auto retrievers = make_retrievers(ws);
  const std::size_t n_methods = retrievers.size();
  const std::size_t n_metrics = config.metrics.size();
  const std::size_t n_queries = retrievers.front().front().queries->size();
  log << "retrievals: " << n_queries << " x " << n_methods << " = " << n_queries * n_methods
      << " (" << n_metrics << " metric(s), " << config.repeats << " timing repeats)\n";

  std::vector<std::vector<Evaluated>> evaluated(n_methods, std::vector<Evaluated>(n_metrics));
  for_each_maybe_parallel(n_methods, options.parallel, [&](std::size_t mi) {
    for (std::size_t j = 0; j < n_metrics; ++j) evaluated[mi][j] = evaluate(retrievers[mi][j], config);
  });

  // Timing always runs on one thread, after evaluation.
  std::vector<std::vector<TimingReport>> timing(n_methods, std::vector<TimingReport>(n_metrics));
  for (std::size_t mi = 0; mi < n_methods; ++mi) {
    for (std::size_t j = 0; j < n_metrics; ++j) {
      timing[mi][j] = time_retriever(retrievers[mi][j], max_k(config.K), config.repeats);
    }
  }

  const std::size_t pk = pairwise_k(config.K);
  Json report = Json::object();
  report["schema"] = "cbir-report/1";
  report["config_echo"] = config_echo(config);
  report["retrievals"] = Json{{"queries", n_queries},
                              {"methods", n_methods},
                              {"total", n_queries * n_methods},
                              {"metrics", n_metrics},
                              {"repeats", config.repeats}};
  Json methods = Json::array();
  std::filesystem::create_directories(options.out_dir);
  for (std::size_t mi = 0; mi < n_methods; ++mi) {
    const Retriever& first = retrievers[mi].front();
    const MethodConfig& mc = config.methods[mi];
    Json m = Json::object();
    m["name"] = mc.name;
    m["kind"] = std::string(method_kind(mc));
    m["components"] = first.components;
    m["feature_dim"] = first.feature_dim;
    m["n_queries"] = n_queries;
    m["n_database"] = first.database->size();
    Json results = Json::object();
    Json times = Json::object();
    for (std::size_t j = 0; j < n_metrics; ++j) {
      const Retriever& r = retrievers[mi][j];
      const Evaluated& e = evaluated[mi][j];
      const std::string metric(metric_name(r.metric));
      results[metric] = results_json(r, e, config);
      times[metric] = timing_json(timing[mi][j]);
      const auto csv = options.out_dir / (file_stem(mc.name) + "_" + metric + ".csv");
      std::ofstream out(csv, std::ios::binary | std::ios::trunc);
      if (!out) fail(Errc::IoFailure, "cannot write " + csv.string());
      out << render_eval_csv(e.table);
      const std::size_t p = e.table.k_position(pk);
      log << mc.name << " [" << metric_label(r.metric) << "] P@" << pk << " = "
          << sig6(e.table.overall.precision[p]) << ", mean " << sig6(timing[mi][j].mean_ms)
          << " ms\n";
    }
    m["results"] = results;
    m["warnings"] = first.warnings;
    m["timing"] = times;
    methods.push_back(std::move(m));
  }
  report["methods"] = methods;

  Json tests = Json::array();
  for (std::size_t j = 0; j < n_metrics; ++j) {
    const std::string metric(metric_name(config.metrics[j]));
    for (std::size_t a = 0; a < n_methods; ++a) {
      for (std::size_t b = a + 1; b < n_methods; ++b) {
        tests.push_back(pairwise_json(metric, pk, config.methods[a].name, config.methods[b].name,
                                      evaluated[a][j].table.column(MetricFamily::Precision, pk),
                                      evaluated[b][j].table.column(MetricFamily::Precision, pk)));
      }
    }
  }
  report["n_pairwise_tests"] = tests.size();
  report["pairwise_tests"] = tests;
  report["multiple_comparison_correction"] = "none";
  report["generated_at"] = options.timestamp ? *options.timestamp : utc_now();

  EvalOutcome outcome;
  outcome.report_path = options.out_dir / "report.json";
  report::write_json(outcome.report_path, report);
  log << "wrote " << outcome.report_path.string() << '\n';
  outcome.report = std::move(report);
  outcome.n_queries = n_queries;
  outcome.n_methods = n_methods;
  return outcome;
}

std::vector<BenchRow> run_bench(const RunConfig& config, std::ostream& log) {
  if (config.K.empty()) fail(Errc::InvalidArgument, "k list is empty");
  Workspace ws(config, log);
  const auto retrievers = make_retrievers(ws);
  std::vector<BenchRow> rows;
  for (const auto& per_metric : retrievers) {
    for (const Retriever& r : per_metric) {
      rows.push_back({r.name, r.metric, time_retriever(r, max_k(config.K), config.repeats)});
    }
  }
  return rows;
}

std::string render_bench_csv(const std::vector<BenchRow>& rows) {
  bool several = false;
  for (const auto& r : rows) several = several || r.metric != rows.front().metric;
  std::ostringstream os;
  os << "method,mean_ms,std_ms,noise_ms\n";
  char buf[128];
  for (const auto& r : rows) {
    std::string name = r.method;
    if (several) name += "/" + std::string(metric_label(r.metric));
    std::snprintf(buf, sizeof buf, ",%.6g,%.6g,%.6g\n", r.timing.mean_ms, r.timing.std_ms,
                  r.timing.noise_ms);
    os << name << buf;
  }
  return os.str();
}

std::vector<std::filesystem::path> run_report(const std::filesystem::path& report_path,
                                              const std::filesystem::path& out_dir) {
  const Json doc = report::read_json(report_path);
  std::filesystem::create_directories(out_dir);
  const std::vector<std::pair<std::string, std::string>> files{
      {"summary.csv", report::summary_csv(doc)},
      {"summary.md", report::summary_markdown(doc)},
      {"pairwise.csv", report::pairwise_csv(doc)}};
  std::vector<std::filesystem::path> written;
  for (const auto& [name, body] : files) {
    const auto path = out_dir / name;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(Errc::IoFailure, "cannot write " + path.string());
    out << body;
    written.push_back(path);
  }
  return written;
}

}  // namespace cbir
