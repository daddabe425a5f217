#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "cbir/store.hpp"

namespace cbir {

enum class Partition : std::uint8_t { Train = 0, Val = 1, Test = 2 };

std::string_view partition_name(Partition p) noexcept;

struct SplitRatios {
  double train = 0.5;
  double val = 0.2;
  double test = 0.3;

  /// Throws InvalidArgument unless each is in (0,1) and they sum to 1.
  void validate() const;
  std::array<double, 3> as_array() const { return {train, val, test}; }
};

struct SplitAssignment {
  /// Aligned to the manifest rows passed to stratified_split.
  std::vector<std::string> ids;
  std::vector<Partition> partitions;
  /// class code -> {train, val, test}
  std::map<int, std::array<std::size_t, 3>> per_class_counts;
  std::uint64_t seed = 0;
  /// DegenerateRatio notices (a partition got 0 items from a class of >= 3).
  std::vector<std::string> warnings;
};

/// Floor then largest remainder; remainder ties go Train, then Val, then
/// Test.
std::array<std::size_t, 3> allocate_counts(std::size_t class_size,
                                           const SplitRatios& ratios);

/// Per class: ids sorted, shuffled with splitmix64 seeded by
/// seed ^ mix64(class code), then cut into Train | Val | Test.
SplitAssignment stratified_split(const Manifest& manifest,
                                 const SplitRatios& ratios,
                                 std::uint64_t seed);

/// `item_id,partition` CSV in manifest order.
std::string render_split_csv(const SplitAssignment& split);
void write_split_csv(const std::filesystem::path& path,
                     const SplitAssignment& split);

/// Per-class count table: one row per partition, one column per class,
/// with a Total column.
std::string render_split_table(const SplitAssignment& split);

}  // namespace cbir
