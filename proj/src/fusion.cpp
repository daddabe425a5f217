#include "cbir/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include <Eigen/Core>

#include "cbir/error.hpp"
#include "cbir/linalg.hpp"
#include "json.hpp"

namespace cbir {
namespace {

void check_aligned(const SetRefs& sets, const char* op) {
  if (sets.size() < 2) {
    fail(Errc::InvalidArgument, std::string(op) + " needs at least 2 sets");
  }
  const EmbeddingSet& first = sets.front();
  for (std::size_t s = 1; s < sets.size(); ++s) {
    const EmbeddingSet& other = sets[s];
    if (other.ids() != first.ids()) {
      fail(Errc::IdOrderMismatch, std::string(op) + ": set " + std::to_string(s) +
                                      " ids differ from set 0");
    }
    if (other.labels() != first.labels()) {
      fail(Errc::LabelMismatch, std::string(op) + ": set " + std::to_string(s) +
                                    " labels differ from set 0");
    }
  }
}

// Modified Gram-Schmidt of `v` against the first `count` rows of `basis`.
// Returns the norm remaining before normalization.
double orthonormalize_against(std::vector<double>& basis, std::size_t count,
                              std::size_t d, std::span<double> v) {
  for (int pass = 0; pass < 2; ++pass) {
    for (std::size_t i = 0; i < count; ++i) {
      const double* b = basis.data() + i * d;
      double proj = 0.0;
      for (std::size_t c = 0; c < d; ++c) proj += b[c] * v[c];
      for (std::size_t c = 0; c < d; ++c) v[c] -= proj * b[c];
    }
  }
  double norm = 0.0;
  for (double x : v) norm += x * x;
  norm = std::sqrt(norm);
  if (norm > 0.0) {
    for (double& x : v) x /= norm;
  }
  return norm;
}

}  // namespace

std::string_view fusion_mode_name(FusionMode m) noexcept {
  switch (m) {
    case FusionMode::Concat: return "concat";
    case FusionMode::FeatureAverage: return "average";
    case FusionMode::PCA: return "pca";
    case FusionMode::ScoreWeighted: return "weighted";
    case FusionMode::ScoreAttention: return "attention";
  }
  return "?";
}

FusionMode parse_fusion_mode(std::string_view text) {
  for (FusionMode m : {FusionMode::Concat, FusionMode::FeatureAverage,
                       FusionMode::PCA, FusionMode::ScoreWeighted,
                       FusionMode::ScoreAttention}) {
    if (text == fusion_mode_name(m)) return m;
  }
  fail(Errc::InvalidArgument, "unknown fusion mode: " + std::string(text));
}

void FusionSpec::validate() const {
  if (weights) {
    double sum = 0.0;
    for (double w : *weights) {
      if (!(w >= 0.0) || !std::isfinite(w)) {
        fail(Errc::InvalidArgument, "fusion weights must be nonnegative");
      }
      sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
      fail(Errc::InvalidArgument, "fusion weights must sum to 1");
    }
    if (!components.empty() && components.size() != weights->size()) {
      fail(Errc::WeightCountMismatch, std::to_string(weights->size()) +
                                          " weights for " +
                                          std::to_string(components.size()) +
                                          " components");
    }
  }
  if (target_dim && *target_dim < 1) {
    fail(Errc::InvalidArgument, "target_dim must be >= 1");
  }
}

EmbeddingSet concat_features(const SetRefs& sets) {
  check_aligned(sets, "concat_features");
  const EmbeddingSet& first = sets.front();
  const std::size_t n = first.size();
  std::size_t total = 0;
  for (const EmbeddingSet& s : sets) total += s.dim();
  std::vector<float> out(n * total);
  for (std::size_t r = 0; r < n; ++r) {
    float* dst = out.data() + r * total;
    for (const EmbeddingSet& s : sets) {
      const auto row = s.row(r);
      dst = std::copy(row.begin(), row.end(), dst);
    }
  }
  return EmbeddingSet(first.ids(), first.labels(), std::move(out), total);
}

EmbeddingSet average_features(const SetRefs& sets) {
  if (sets.size() >= 2) {
    for (const EmbeddingSet& s : sets) {
      if (s.dim() != sets.front().get().dim()) {
        fail(Errc::DimMismatch, "average_features: dims differ");
      }
      if (s.size() != sets.front().get().size()) {
        fail(Errc::IdOrderMismatch, "average_features: row counts differ");
      }
    }
  }
  check_aligned(sets, "average_features");
  const EmbeddingSet& first = sets.front();
  const std::size_t count = first.matrix().size();
  std::vector<double> acc(count, 0.0);
  for (const EmbeddingSet& s : sets) {
    const auto m = s.matrix();
    for (std::size_t i = 0; i < count; ++i) acc[i] += m[i];
  }
  const double inv = 1.0 / static_cast<double>(sets.size());
  std::vector<float> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    out[i] = static_cast<float>(acc[i] * inv);
  }
  return EmbeddingSet(first.ids(), first.labels(), std::move(out), first.dim());
}

PcaModel pca_fit(const EmbeddingSet& train, std::size_t target_dim) {
  const std::size_t n = train.size();
  const std::size_t d = train.dim();
  if (n < 2) fail(Errc::TooFewValues, "pca_fit needs at least 2 rows");
  if (target_dim < 1 || target_dim > std::min(n - 1, d)) {
    fail(Errc::InvalidArgument,
         "pca_fit: target_dim " + std::to_string(target_dim) +
             " outside [1, min(n-1, d) = " + std::to_string(std::min(n - 1, d)) +
             "]");
  }

  PcaModel model;
  model.dim = d;
  model.target_dim = target_dim;
  model.mean.assign(d, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    const auto row = train.row(r);
    for (std::size_t c = 0; c < d; ++c) model.mean[c] += row[c];
  }
  for (double& m : model.mean) m /= static_cast<double>(n);

  std::vector<double> x(n * d);
  for (std::size_t r = 0; r < n; ++r) {
    const auto row = train.row(r);
    for (std::size_t c = 0; c < d; ++c) x[r * d + c] = row[c] - model.mean[c];
  }
  const double denom = static_cast<double>(n - 1);

  // Eigenpairs of the covariance, as (value, d-vector) in descending order.
  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const Eigen::Map<const RowMajor> xm(x.data(), static_cast<Eigen::Index>(n),
                                      static_cast<Eigen::Index>(d));
  std::vector<double> values;
  std::vector<double> vectors;  // rows of length d
  if (d <= n) {
    std::vector<double> cov(d * d);
    Eigen::Map<RowMajor> cm(cov.data(), static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
    cm.noalias() = xm.transpose() * xm;
    cm /= denom;
    auto eig = symmetric_eigen(cov, d);
    values = std::move(eig.values);
    vectors = std::move(eig.vectors);
  } else {
    // Gram route: C = X^T X/(n-1) and G = X X^T/(n-1) share nonzero
    // eigenvalues; v = X^T u / sqrt((n-1) * lambda).
    std::vector<double> gram(n * n);
    Eigen::Map<RowMajor> gm(gram.data(), static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    gm.noalias() = xm * xm.transpose();
    gm /= denom;
    auto eig = symmetric_eigen(gram, n);
    values = std::move(eig.values);
    vectors.assign(n * d, 0.0);
    const Eigen::Map<const RowMajor> um(eig.vectors.data(), static_cast<Eigen::Index>(n),
                                        static_cast<Eigen::Index>(n));
    Eigen::Map<RowMajor> vm(vectors.data(), static_cast<Eigen::Index>(n),
                            static_cast<Eigen::Index>(d));
    vm.noalias() = um * xm;
    const double lmax = values.empty() ? 0.0 : std::max(values.front(), 0.0);
    for (std::size_t k = 0; k < n; ++k) {
      const bool keep = lmax > 0.0 && values[k] > 1e-12 * lmax;
      vm.row(static_cast<Eigen::Index>(k)) *= keep ? 1.0 / std::sqrt(denom * values[k]) : 0.0;
    }
  }

  const double lmax = values.empty() ? 0.0 : std::max(values.front(), 0.0);
  std::size_t positive = 0;
  while (positive < values.size() && lmax > 0.0 &&
         values[positive] > 1e-12 * lmax) {
    ++positive;
  }

  model.basis.assign(target_dim * d, 0.0);
  model.explained_variance.assign(target_dim, 0.0);
  std::size_t filled = 0;
  std::vector<double> v(d);
  for (std::size_t k = 0; k < std::min(positive, target_dim); ++k) {
    std::copy_n(vectors.begin() + static_cast<std::ptrdiff_t>(k * d), d, v.begin());
    orthonormalize_against(model.basis, filled, d, v);
    std::copy(v.begin(), v.end(), model.basis.begin() + static_cast<std::ptrdiff_t>(filled * d));
    model.explained_variance[filled] = values[k];
    ++filled;
  }
  if (filled < target_dim) {
    model.rank_deficient = true;
    model.warnings.push_back("RankDeficient: " + std::to_string(positive) +
                             " positive eigenvalue(s) for target_dim " +
                             std::to_string(target_dim) +
                             "; padded with an orthonormal complement");
    for (std::size_t e = 0; e < d && filled < target_dim; ++e) {
      std::fill(v.begin(), v.end(), 0.0);
      v[e] = 1.0;
      if (orthonormalize_against(model.basis, filled, d, v) < 1e-6) continue;
      std::copy(v.begin(), v.end(), model.basis.begin() + static_cast<std::ptrdiff_t>(filled * d));
      model.explained_variance[filled] = 0.0;
      ++filled;
    }
  }

  // First coordinate with non-negligible magnitude is made positive.
  for (std::size_t k = 0; k < target_dim; ++k) {
    double* b = model.basis.data() + k * d;
    for (std::size_t c = 0; c < d; ++c) {
      if (std::abs(b[c]) > 1e-8) {
        if (b[c] < 0.0) {
          for (std::size_t j = 0; j < d; ++j) b[j] = -b[j];
        }
        break;
      }
    }
  }
  return model;
}

EmbeddingSet pca_project(const PcaModel& model, const EmbeddingSet& set) {
  if (set.dim() != model.dim) {
    fail(Errc::DimMismatch, "pca_project: set dim " + std::to_string(set.dim()) +
                                " != model dim " + std::to_string(model.dim));
  }
  const std::size_t d = model.dim;
  const std::size_t t = model.target_dim;
  std::vector<float> out(set.size() * t);
  std::vector<double> centered(d);
  for (std::size_t r = 0; r < set.size(); ++r) {
    const auto row = set.row(r);
    for (std::size_t c = 0; c < d; ++c) centered[c] = row[c] - model.mean[c];
    for (std::size_t k = 0; k < t; ++k) {
      const double* b = model.basis.data() + k * d;
      double s = 0.0;
      for (std::size_t c = 0; c < d; ++c) s += b[c] * centered[c];
      out[r * t + k] = static_cast<float>(s);
    }
  }
  return EmbeddingSet(set.ids(), set.labels(), std::move(out), t);
}

void save_pca_model(const PcaModel& model,
                    const std::filesystem::path& prefix) {
  std::vector<float> rows;
  rows.reserve((model.target_dim + 1) * model.dim);
  for (double m : model.mean) rows.push_back(static_cast<float>(m));
  for (double b : model.basis) rows.push_back(static_cast<float>(b));
  auto meir = prefix;
  meir += ".meir";
  write_matrix(meir, model.target_dim + 1, model.dim, rows);

  nlohmann::ordered_json header;
  header["kind"] = "pca";
  header["dim"] = model.dim;
  header["target_dim"] = model.target_dim;
  header["rank_deficient"] = model.rank_deficient;
  header["explained_variance"] = model.explained_variance;
  header["matrix"] = meir.filename().string();
  auto json_path = prefix;
  json_path += ".json";
  std::ofstream out(json_path, std::ios::trunc);
  if (!out) fail(Errc::IoFailure, "cannot write " + json_path.string());
  out << header.dump(2) << '\n';
}

PcaModel load_pca_model(const std::filesystem::path& prefix) {
  auto json_path = prefix;
  json_path += ".json";
  std::ifstream in(json_path);
  if (!in) fail(Errc::IoFailure, "cannot open " + json_path.string());
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::IoFailure, json_path.string() + ": " + e.what());
  }
  auto meir = prefix;
  meir += ".meir";
  const MatrixFile m = read_matrix(meir);
  PcaModel model;
  model.dim = header.at("dim").get<std::size_t>();
  model.target_dim = header.at("target_dim").get<std::size_t>();
  model.rank_deficient = header.value("rank_deficient", false);
  model.explained_variance =
      header.at("explained_variance").get<std::vector<double>>();
  if (m.cols != model.dim || m.rows != model.target_dim + 1 ||
      model.explained_variance.size() != model.target_dim) {
    fail(Errc::CountMismatch, "PCA model header does not match matrix");
  }
  model.mean.assign(m.data.begin(), m.data.begin() + static_cast<std::ptrdiff_t>(model.dim));
  model.basis.assign(m.data.begin() + static_cast<std::ptrdiff_t>(model.dim), m.data.end());
  return model;
}

std::vector<double> zscore(std::span<const double> scores) {
  std::vector<double> z(scores.size(), 0.0);
  if (scores.empty()) return z;
  double mean = 0.0;
  for (double s : scores) mean += s;
  mean /= static_cast<double>(scores.size());
  double var = 0.0;
  for (double s : scores) var += (s - mean) * (s - mean);
  const double sd = std::sqrt(var / static_cast<double>(scores.size()));
  if (sd < 1e-12) return z;
  for (std::size_t i = 0; i < scores.size(); ++i) z[i] = (scores[i] - mean) / sd;
  return z;
}

std::vector<double> attention_weights(
    std::span<const std::vector<double>> zscores) {
  std::vector<double> top(zscores.size());
  for (std::size_t m = 0; m < zscores.size(); ++m) {
    top[m] = zscores[m].empty()
                 ? 0.0
                 : *std::max_element(zscores[m].begin(), zscores[m].end());
  }
  const double peak = top.empty() ? 0.0 : *std::max_element(top.begin(), top.end());
  std::vector<double> w(top.size());
  double sum = 0.0;
  for (std::size_t m = 0; m < top.size(); ++m) {
    w[m] = std::exp(top[m] - peak);
    sum += w[m];
  }
  for (double& x : w) x /= sum;
  return w;
}

FusedRanking score_fusion(std::span<const ScoreInput> inputs,
                          const FusionSpec& spec, std::size_t k,
                          std::string query_id) {
  if (!is_score_level(spec.mode)) {
    fail(Errc::InvalidArgument, "score_fusion needs mode weighted or attention");
  }
  if (inputs.empty()) fail(Errc::TooFewMethods, "score_fusion: no inputs");
  const EmbeddingSet* db = inputs.front().database;
  if (db == nullptr) fail(Errc::InvalidArgument, "score_fusion: null database");
  for (const auto& in : inputs) {
    if (in.database == nullptr || in.scores.size() != db->size() ||
        (in.database != db && in.database->ids() != db->ids())) {
      fail(Errc::RowOrderMismatch,
           "score_fusion: inputs do not cover the same database rows");
    }
  }

  std::vector<std::vector<double>> z;
  z.reserve(inputs.size());
  for (const auto& in : inputs) z.push_back(zscore(in.scores));

  std::vector<double> w;
  if (spec.mode == FusionMode::ScoreWeighted) {
    if (!spec.weights) {
      fail(Errc::WeightCountMismatch, "weighted fusion without weights");
    }
    w = *spec.weights;
    if (w.size() != inputs.size()) {
      fail(Errc::WeightCountMismatch, std::to_string(w.size()) + " weights for " +
                                          std::to_string(inputs.size()) +
                                          " methods");
    }
  } else {
    w = attention_weights(z);
  }

  std::vector<double> fused(db->size(), 0.0);
  for (std::size_t m = 0; m < z.size(); ++m) {
    for (std::size_t r = 0; r < fused.size(); ++r) fused[r] += w[m] * z[m][r];
  }
  FusedRanking out;
  out.list = select_top_k(*db, Metric::InnerProduct, fused, k, std::move(query_id));
  out.weights = std::move(w);
  return out;
}

std::pair<std::string, std::string> select_best_two(
    const std::map<std::string, double>& validation_scores) {
  if (validation_scores.size() < 2) {
    fail(Errc::TooFewMethods, "select_best_two needs at least 2 methods");
  }
  std::vector<std::pair<std::string, double>> ranked(validation_scores.begin(),
                                                     validation_scores.end());
  // std::map iterates names in ascending order, so a stable sort on score
  // alone leaves ties lexicographic.
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  return {ranked[0].first, ranked[1].first};
}

std::vector<double> proportional_weights(std::span<const double> scores) {
  std::vector<double> w(scores.begin(), scores.end());
  double sum = 0.0;
  for (double& x : w) {
    x = std::max(0.0, x);
    sum += x;
  }
  if (sum <= 0.0) {
    std::fill(w.begin(), w.end(), 1.0 / static_cast<double>(w.size()));
  } else {
    for (double& x : w) x /= sum;
  }
  return w;
}

}  // namespace cbir
