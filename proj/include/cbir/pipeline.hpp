#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "cbir/config.hpp"
#include "cbir/error.hpp"
#include "cbir/report.hpp"
#include "cbir/splitter.hpp"
#include "cbir/timing.hpp"

namespace cbir {

/// Stable process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitNumeric = 4;

int exit_code_for(Errc code) noexcept;

/// Command-line overrides applied on top of a RunConfig.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::vector<std::size_t>> K;
  std::optional<std::vector<Metric>> metrics;
};
RunConfig apply_overrides(RunConfig config, const Overrides& o);

// split -------------------------------------------------------------------

SplitAssignment run_split(const std::filesystem::path& manifest_path,
                          const SplitRatios& ratios, std::uint64_t seed,
                          const std::filesystem::path& out_path,
                          std::ostream& log);

// fuse --------------------------------------------------------------------

struct FuseOutcome {
  std::filesystem::path database_matrix;
  std::filesystem::path queries_matrix;
  std::optional<std::filesystem::path> pca_prefix;
  std::vector<std::string> components;
  std::size_t dim = 0;
};

/// Writes `<out_dir>/<name>_database.{meir,csv}` and `_queries` for a
/// feature-level fusion method of the config.
FuseOutcome run_fuse(const RunConfig& config, const std::string& name,
                     const std::filesystem::path& out_dir, std::ostream& log);

// eval --------------------------------------------------------------------

struct EvalOptions {
  std::filesystem::path out_dir = ".";
  bool parallel = false;
  /// Fixed value for `generated_at` (tests); current UTC time when empty.
  std::optional<std::string> timestamp;
};

struct EvalOutcome {
  report::Json report;
  std::filesystem::path report_path;
  std::size_t n_queries = 0;
  std::size_t n_methods = 0;
};

/// Full matrix: for every method and metric, index -> timed search ->
/// metrics -> bootstrap CIs, then pairwise tests on precision@10.
/// Writes report.json and `<method>_<metric>.csv` into out_dir.
EvalOutcome run_eval(const RunConfig& config, const EvalOptions& options,
                     std::ostream& log);

// bench -------------------------------------------------------------------

struct BenchRow {
  std::string method;
  Metric metric = Metric::EuclideanL2;
  TimingReport timing;
};

std::vector<BenchRow> run_bench(const RunConfig& config, std::ostream& log);
/// method,mean_ms,std_ms,noise_ms. With several metrics the method cell is
/// `<name>/<FlatL2|FlatIP>`.
std::string render_bench_csv(const std::vector<BenchRow>& rows);

// report ------------------------------------------------------------------

/// Re-renders report.json into summary.csv, summary.md and pairwise.csv.
std::vector<std::filesystem::path> run_report(
    const std::filesystem::path& report_path,
    const std::filesystem::path& out_dir);

}  // namespace cbir
