#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"

namespace cbir::report {

using Json = nlohmann::ordered_json;

/// Value rounded to 6 significant digits, the precision every real in the
/// report is emitted at.
double sig6(double x);

/// The report with `generated_at` and every method's `timing` subtree
/// removed: the part that must be identical across reruns.
Json deterministic_view(const Json& report);

Json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const Json& doc);

/// One row per (method, metric): method,metric,dim,P@k...,CI,R@k,NDCG@k,
/// mean_ms,std_ms,noise_ms. k is 10 when evaluated, else the largest k.
std::string summary_csv(const Json& report);
std::string summary_markdown(const Json& report);
/// Pairwise tests as CSV: metric,k,a,b,n,t,p_t,U,p_u,d
std::string pairwise_csv(const Json& report);

}  // namespace cbir::report
