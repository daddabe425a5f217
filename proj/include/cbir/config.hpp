#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cbir/fusion.hpp"
#include "cbir/index.hpp"
#include "cbir/splitter.hpp"

namespace cbir {

/// One `method.<name>.*` block. A method either names embedding files or
/// fuses previously declared methods.
struct MethodConfig {
  std::string name;
  std::string database;  // paths as written; resolved against base_dir
  std::string database_manifest;
  std::string queries;
  std::string queries_manifest;
  std::optional<FusionSpec> fusion;
  /// `components = auto`: pick the best two of `candidates` by validation
  /// precision@10.
  bool auto_components = false;
  std::vector<std::string> candidates;
  std::string validation;  // report.json with validation precision

  bool operator==(const MethodConfig&) const = default;
};

struct RunConfig {
  std::uint64_t seed = 42;
  SplitRatios ratios{};
  std::vector<Metric> metrics{Metric::EuclideanL2, Metric::InnerProduct};
  std::vector<std::size_t> K{1, 5, 10, 20, 50};
  std::size_t repeats = 10;
  std::size_t n_boot = 1000;
  double level = 0.95;
  std::vector<int> labels{1, 2, 3, 4, 5, 6};
  std::vector<MethodConfig> methods;

  /// Directory relative paths are resolved against. Not serialized.
  std::filesystem::path base_dir;

  const MethodConfig* find(std::string_view name) const;
  std::filesystem::path resolve(const std::string& path) const;

  bool operator==(const RunConfig& o) const {
    return seed == o.seed && ratios.train == o.ratios.train &&
           ratios.val == o.ratios.val && ratios.test == o.ratios.test &&
           metrics == o.metrics && K == o.K && repeats == o.repeats &&
           n_boot == o.n_boot && level == o.level && labels == o.labels &&
           methods == o.methods;
  }
};

/// Throws Error(ConfigParse) with a line number on malformed input.
RunConfig parse_config(std::string_view text,
                       const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);
/// Canonical text form; parse_config(render_config(c)) == c.
std::string render_config(const RunConfig& config);

/// Parses "l2", "ip" or "both".
std::vector<Metric> parse_metric_list(std::string_view text);

}  // namespace cbir
