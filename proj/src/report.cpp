#include "cbir/report.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "cbir/error.hpp"

namespace cbir::report {
namespace {

std::string fmt6(const Json& v) {
  if (v.is_null()) return "";
  if (v.is_number_integer() || v.is_number_unsigned()) return v.dump();
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v.get<double>());
  return buf;
}

const Json* lookup(const Json& j, std::initializer_list<const char*> path) {
  const Json* cur = &j;
  for (const char* key : path) {
    if (!cur->is_object() || !cur->contains(key)) return nullptr;
    cur = &(*cur)[key];
  }
  return cur;
}

std::string summary_k(const Json& report) {
  const Json* ks = lookup(report, {"config_echo", "k"});
  if (ks == nullptr || !ks->is_array() || ks->empty()) return "10";
  std::size_t best = 0;
  for (const auto& k : *ks) {
    const auto v = k.get<std::size_t>();
    if (v == 10) return "10";
    best = std::max(best, v);
  }
  return std::to_string(best);
}

struct SummaryRow {
  std::string method, metric, dim, precision, ci_low, ci_high, recall, ndcg,
      mean_ms, std_ms, noise_ms;
};

std::vector<SummaryRow> summary_rows(const Json& report, const std::string& k) {
  std::vector<SummaryRow> rows;
  if (!report.contains("methods")) return rows;
  for (const auto& m : report["methods"]) {
    if (!m.contains("results")) continue;
    for (const auto& [metric, res] : m["results"].items()) {
      SummaryRow row;
      row.method = m.value("name", "");
      row.metric = metric;
      row.dim = m.contains("feature_dim") ? m["feature_dim"].dump() : "";
      const auto get = [&](std::initializer_list<const char*> path) {
        const Json* v = lookup(res, path);
        return v ? fmt6(*v) : std::string{};
      };
      row.precision = get({"aggregates", "precision", k.c_str()});
      row.recall = get({"aggregates", "recall", k.c_str()});
      row.ndcg = get({"aggregates", "ndcg", k.c_str()});
      row.ci_low = get({"bootstrap", "precision", k.c_str(), "ci_low"});
      row.ci_high = get({"bootstrap", "precision", k.c_str(), "ci_high"});
      if (const Json* t = lookup(m, {"timing", metric.c_str()})) {
        row.mean_ms = fmt6(t->value("mean_ms", Json()));
        row.std_ms = fmt6(t->value("std_ms", Json()));
        row.noise_ms = fmt6(t->value("noise_ms", Json()));
      }
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

}  // namespace

double sig6(double x) {
  if (!std::isfinite(x) || x == 0.0) return x == 0.0 ? 0.0 : x;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return std::strtod(buf, nullptr);
}

Json deterministic_view(const Json& report) {
  Json out = report;
  out.erase("generated_at");
  if (out.contains("methods")) {
    for (auto& m : out["methods"]) m.erase("timing");
  }
  return out;
}

Json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::IoFailure, "cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::IoFailure, path.string() + ": " + e.what());
  }
}

void write_json(const std::filesystem::path& path, const Json& doc) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(Errc::IoFailure, "cannot write " + path.string());
  out << doc.dump(2) << '\n';
  if (!out) fail(Errc::IoFailure, "write failed: " + path.string());
}

std::string summary_csv(const Json& report) {
  const std::string k = summary_k(report);
  std::ostringstream os;
  os << "method,metric,feature_dim,k,precision,ci_low,ci_high,recall,ndcg,"
        "mean_ms,std_ms,noise_ms\n";
  for (const auto& r : summary_rows(report, k)) {
    os << r.method << ',' << r.metric << ',' << r.dim << ',' << k << ','
       << r.precision << ',' << r.ci_low << ',' << r.ci_high << ',' << r.recall
       << ',' << r.ndcg << ',' << r.mean_ms << ',' << r.std_ms << ','
       << r.noise_ms << '\n';
  }
  return os.str();
}

std::string summary_markdown(const Json& report) {
  const std::string k = summary_k(report);
  std::ostringstream os;
  os << "| Method | Index | Dim | P@" << k << " | 95% CI | R@" << k << " | NDCG@"
     << k << " | Mean (ms) | Std (ms) | Noise (ms) |\n";
  os << "|---|---|---:|---:|---|---:|---:|---:|---:|---:|\n";
  for (const auto& r : summary_rows(report, k)) {
    const std::string index = r.metric == "ip" ? "FlatIP" : "FlatL2";
    os << "| " << r.method << " | " << index << " | " << r.dim << " | "
       << r.precision << " | [" << r.ci_low << ", " << r.ci_high << "] | "
       << r.recall << " | " << r.ndcg << " | " << r.mean_ms << " | "
       << r.std_ms << " | " << r.noise_ms << " |\n";
  }
  return os.str();
}

std::string pairwise_csv(const Json& report) {
  std::ostringstream os;
  os << "metric,k,a,b,n,t,p_t,U,p_u,d\n";
  if (!report.contains("pairwise_tests")) return os.str();
  for (const auto& t : report["pairwise_tests"]) {
    os << t.value("metric", "") << ',' << fmt6(t.value("k", Json())) << ','
       << t.value("a", "") << ',' << t.value("b", "") << ','
       << fmt6(t.value("n", Json())) << ',' << fmt6(t.value("t", Json())) << ','
       << fmt6(t.value("p_t", Json())) << ',' << fmt6(t.value("U", Json()))
       << ',' << fmt6(t.value("p_u", Json())) << ','
       << fmt6(t.value("d", Json())) << '\n';
  }
  return os.str();
}

}  // namespace cbir::report
