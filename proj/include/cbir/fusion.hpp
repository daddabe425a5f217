#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cbir/index.hpp"
#include "cbir/store.hpp"

namespace cbir {

enum class FusionMode { Concat, FeatureAverage, PCA, ScoreWeighted, ScoreAttention };

std::string_view fusion_mode_name(FusionMode m) noexcept;
FusionMode parse_fusion_mode(std::string_view text);
/// Feature-level modes produce a new EmbeddingSet; score-level modes fuse
/// rankings at query time.
constexpr bool is_score_level(FusionMode m) noexcept {
  return m == FusionMode::ScoreWeighted || m == FusionMode::ScoreAttention;
}

struct FusionSpec {
  FusionMode mode = FusionMode::Concat;
  std::vector<std::string> components;
  std::optional<std::vector<double>> weights;
  std::optional<std::size_t> target_dim;

  /// Weights nonnegative and summing to 1 within 1e-9; target_dim >= 1.
  void validate() const;
  bool operator==(const FusionSpec&) const = default;
};

using SetRefs = std::vector<std::reference_wrapper<const EmbeddingSet>>;

/// Row i = component rows joined left to right. Needs >= 2 sets with the
/// same ids and labels in the same order.
EmbeddingSet concat_features(const SetRefs& sets);

/// Element-wise mean over >= 2 aligned sets of equal dim.
EmbeddingSet average_features(const SetRefs& sets);

struct PcaModel {
  std::vector<double> mean;                // d
  std::vector<double> basis;               // target_dim x d, orthonormal rows
  std::vector<double> explained_variance;  // target_dim, nonincreasing
  std::size_t dim = 0;
  std::size_t target_dim = 0;
  /// Set when fewer than target_dim positive eigenvalues existed and the
  /// basis was padded with an orthonormal complement.
  bool rank_deficient = false;
  std::vector<std::string> warnings;

  std::span<const double> component(std::size_t i) const {
    return {basis.data() + i * dim, dim};
  }
};

/// Principal axes of the sample covariance. Decomposes whichever of the
/// d x d covariance or n x n Gram matrix is smaller.
PcaModel pca_fit(const EmbeddingSet& train, std::size_t target_dim);

/// row -> basis * (row - mean)
EmbeddingSet pca_project(const PcaModel& model, const EmbeddingSet& set);

/// `<prefix>.meir` holds the mean row followed by the basis rows;
/// `<prefix>.json` holds dims and explained variance.
void save_pca_model(const PcaModel& model, const std::filesystem::path& prefix);
PcaModel load_pca_model(const std::filesystem::path& prefix);

/// Per-method similarity scores of one query over a database (larger is
/// more similar; negate L2 distances before passing them in).
struct ScoreInput {
  const EmbeddingSet* database = nullptr;
  std::vector<double> scores;
};

struct FusedRanking {
  RankedList list;
  std::vector<double> weights;  // weights actually applied, per method
};

/// Population z-score; sd < 1e-12 gives the all-zero vector.
std::vector<double> zscore(std::span<const double> scores);

/// softmax over methods of each method's top-1 z-score.
std::vector<double> attention_weights(
    std::span<const std::vector<double>> zscores);

FusedRanking score_fusion(std::span<const ScoreInput> inputs,
                          const FusionSpec& spec, std::size_t k,
                          std::string query_id = {});

/// The two highest-scoring methods, ties broken by name.
std::pair<std::string, std::string> select_best_two(
    const std::map<std::string, double>& validation_scores);

/// Weights proportional to the given nonnegative scores (uniform when they
/// are all zero).
std::vector<double> proportional_weights(std::span<const double> scores);

}  // namespace cbir
