#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "cbir/error.hpp"

namespace cbir {

/// OverlapDetected with the offending ids attached.
class OverlapError : public Error {
 public:
  explicit OverlapError(std::vector<std::string> ids);
  const std::vector<std::string>& ids() const noexcept { return ids_; }

 private:
  std::vector<std::string> ids_;
};

/// Ordered set of category codes. The default is BIRADS 1..6.
class LabelSpace {
 public:
  LabelSpace();  // {1,2,3,4,5,6}
  explicit LabelSpace(std::vector<int> classes);

  const std::vector<int>& classes() const noexcept { return classes_; }
  bool contains(int label) const noexcept;
  std::size_t size() const noexcept { return classes_.size(); }

 private:
  std::vector<int> classes_;
};

/// n x d matrix of 32-bit reals with aligned ids and labels. Immutable once
/// constructed; every invariant is checked by the constructor.
class EmbeddingSet {
 public:
  EmbeddingSet(std::vector<std::string> ids, std::vector<int> labels,
               std::vector<float> matrix, std::size_t dim);

  std::size_t size() const noexcept { return ids_.size(); }
  std::size_t dim() const noexcept { return dim_; }
  /// True iff every row has unit L2 norm within kUnitNormTolerance.
  bool normalized() const noexcept { return normalized_; }

  const std::vector<std::string>& ids() const noexcept { return ids_; }
  const std::vector<int>& labels() const noexcept { return labels_; }
  std::span<const float> matrix() const noexcept { return matrix_; }
  std::span<const float> row(std::size_t i) const noexcept {
    return {matrix_.data() + i * dim_, dim_};
  }

  bool operator==(const EmbeddingSet&) const = default;

  static constexpr double kUnitNormTolerance = 1e-5;

 private:
  std::vector<std::string> ids_;
  std::vector<int> labels_;
  std::vector<float> matrix_;
  std::size_t dim_;
  bool normalized_;
};

struct ManifestRow {
  std::string item_id;
  int label;
  std::string source_path;

  bool operator==(const ManifestRow&) const = default;
};

struct Manifest {
  std::vector<ManifestRow> rows;
};

/// Raw `.meir` matrix: 24-byte header then n*d little-endian float32.
struct MatrixFile {
  std::uint64_t rows = 0;
  std::uint64_t cols = 0;
  std::vector<float> data;
};

inline constexpr std::size_t kMeirHeaderBytes = 24;
inline constexpr std::uint16_t kMeirVersion = 1;

MatrixFile read_matrix(const std::filesystem::path& path);
void write_matrix(const std::filesystem::path& path, std::uint64_t rows,
                  std::uint64_t cols, std::span<const float> data);

/// Reads `item_id,label[,source_path]` CSV with a header line.
Manifest read_manifest(const std::filesystem::path& path,
                       const LabelSpace& space = LabelSpace{});
/// Writes `item_id,label` (plus source_path when any row has one).
void write_manifest(const std::filesystem::path& path,
                    const Manifest& manifest);

EmbeddingSet load_embedding_set(const std::filesystem::path& matrix_path,
                                const std::filesystem::path& manifest_path,
                                const LabelSpace& space = LabelSpace{});
void save_embedding_set(const EmbeddingSet& set,
                        const std::filesystem::path& matrix_path,
                        const std::filesystem::path& manifest_path);

/// Conventional sidecar path: same stem, `.csv` extension.
std::filesystem::path default_manifest_path(
    const std::filesystem::path& matrix_path);

/// Rows scaled to unit norm. Throws ZeroVector when ||row|| < 1e-12.
EmbeddingSet l2_normalize(const EmbeddingSet& set);

/// Throws OverlapDetected (message lists the shared ids, sorted) unless the
/// id sets are disjoint.
void assert_disjoint(const EmbeddingSet& a, const EmbeddingSet& b);

/// Shared ids, sorted. Empty when disjoint.
std::vector<std::string> shared_ids(const EmbeddingSet& a,
                                    const EmbeddingSet& b);

}  // namespace cbir
