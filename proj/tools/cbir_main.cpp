// cbir: split, fuse, evaluate and benchmark embedding retrieval runs.

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cbir/config.hpp"
#include "cbir/error.hpp"
#include "cbir/pipeline.hpp"

namespace {

using namespace cbir;

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";
  bool parallel = false;
  std::string k;
  std::string metric;
};

std::vector<std::size_t> parse_k_list(const std::string& text) {
  std::vector<std::size_t> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const std::string piece = text.substr(start, comma == std::string::npos ? std::string::npos
                                                                           : comma - start);
    std::size_t v = 0;
    const auto [ptr, ec] = std::from_chars(piece.data(), piece.data() + piece.size(), v);
    if (ec != std::errc{} || ptr != piece.data() + piece.size() || v == 0) {
      fail(Errc::InvalidArgument, "bad --k entry '" + piece + "'");
    }
    out.push_back(v);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

SplitRatios parse_ratios(const std::string& text) {
  std::vector<double> v;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const std::string piece = text.substr(start, comma == std::string::npos ? std::string::npos
                                                                           : comma - start);
    char* end = nullptr;
    const double x = std::strtod(piece.c_str(), &end);
    if (piece.empty() || end != piece.c_str() + piece.size()) {
      fail(Errc::InvalidArgument, "bad --ratios entry '" + piece + "'");
    }
    v.push_back(x);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (v.size() != 3) fail(Errc::InvalidArgument, "--ratios needs train,val,test");
  SplitRatios r{v[0], v[1], v[2]};
  r.validate();
  return r;
}

RunConfig load_with_overrides(const CommonFlags& f) {
  if (f.config.empty()) fail(Errc::InvalidArgument, "--config is required");
  Overrides o;
  o.seed = f.seed;
  if (!f.k.empty()) o.K = parse_k_list(f.k);
  if (!f.metric.empty()) o.metrics = parse_metric_list(f.metric);
  return apply_overrides(load_config(f.config), o);
}

void add_common(CLI::App* cmd, CommonFlags& f, bool eval_flags) {
  cmd->add_option("--config", f.config, "Run configuration file");
  cmd->add_option("--seed", f.seed, "Override the configured seed");
  cmd->add_option("--out-dir", f.out_dir, "Output directory");
  if (eval_flags) {
    cmd->add_flag("--parallel", f.parallel, "Evaluate methods concurrently");
    cmd->add_option("--k", f.k, "Comma-separated k list, e.g. 1,5,10");
    cmd->add_option("--metric", f.metric, "l2, ip or both")
        ->check(CLI::IsMember({"l2", "ip", "both"}));
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Categorical embedding retrieval evaluation"};
  app.require_subcommand(1);

  CommonFlags split_f, fuse_f, eval_f, bench_f, report_f;
  std::string manifest, ratios_text, split_out, fuse_name, report_path, bench_out;

  auto* split = app.add_subcommand("split", "Stratified train/val/test split of a manifest");
  add_common(split, split_f, false);
  split->add_option("--manifest", manifest, "Manifest CSV (item_id,label[,source_path])")
      ->required();
  split->add_option("--ratios", ratios_text, "train,val,test (default 0.5,0.2,0.3)");
  split->add_option("--out", split_out, "Split CSV path (default <out-dir>/split.csv)");

  auto* fuse = app.add_subcommand("fuse", "Write the embeddings of a feature-level fusion");
  add_common(fuse, fuse_f, false);
  fuse->add_option("--name", fuse_name, "Fusion method name from the config")->required();

  auto* eval = app.add_subcommand("eval", "Evaluate every configured method");
  add_common(eval, eval_f, true);

  auto* bench = app.add_subcommand("bench", "Time every configured method");
  add_common(bench, bench_f, true);
  bench->add_option("--out", bench_out, "Also write the CSV here");

  auto* rep = app.add_subcommand("report", "Render report.json into CSV and markdown tables");
  add_common(rep, report_f, false);
  rep->add_option("--report", report_path, "report.json (default <out-dir>/report.json)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (split->parsed()) {
      SplitRatios ratios;
      std::uint64_t seed = 42;
      if (!split_f.config.empty()) {
        const RunConfig cfg = load_config(split_f.config);
        ratios = cfg.ratios;
        seed = cfg.seed;
      }
      if (!ratios_text.empty()) ratios = parse_ratios(ratios_text);
      if (split_f.seed) seed = *split_f.seed;
      std::filesystem::path out = split_out;
      if (out.empty()) {
        std::filesystem::create_directories(split_f.out_dir);
        out = std::filesystem::path(split_f.out_dir) / "split.csv";
      }
      run_split(manifest, ratios, seed, out, std::cout);
    } else if (fuse->parsed()) {
      run_fuse(load_with_overrides(fuse_f), fuse_name, fuse_f.out_dir, std::cout);
    } else if (eval->parsed()) {
      EvalOptions opts;
      opts.out_dir = eval_f.out_dir;
      opts.parallel = eval_f.parallel;
      run_eval(load_with_overrides(eval_f), opts, std::cout);
    } else if (bench->parsed()) {
      const auto rows = run_bench(load_with_overrides(bench_f), std::cerr);
      const std::string csv = render_bench_csv(rows);
      std::cout << csv;
      if (!bench_out.empty()) {
        std::ofstream out(bench_out, std::ios::binary | std::ios::trunc);
        if (!out) fail(Errc::IoFailure, "cannot write " + bench_out);
        out << csv;
      }
    } else if (rep->parsed()) {
      const std::filesystem::path in =
          report_path.empty() ? std::filesystem::path(report_f.out_dir) / "report.json"
                              : std::filesystem::path(report_path);
      for (const auto& p : run_report(in, report_f.out_dir)) {
        std::cout << "wrote " << p.string() << '\n';
      }
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumeric;
  }
  return kExitOk;
}
