#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cbir/store.hpp"

namespace cbir::testing {

inline std::vector<std::string> make_ids(std::size_t n, const std::string& prefix) {
  std::vector<std::string> ids;
  ids.reserve(n);
  for (std::size_t i = 0; i < n; ++i) ids.push_back(prefix + std::to_string(i));
  return ids;
}

/// Gaussian rows, labels cycling through 1..n_labels.
inline EmbeddingSet random_set(std::size_t n, std::size_t d, std::uint64_t seed,
                               const std::string& prefix = "x", int n_labels = 6) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<float> g(0.0f, 1.0f);
  std::vector<float> m(n * d);
  for (auto& v : m) v = g(gen);
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = 1 + static_cast<int>(i % n_labels);
  return EmbeddingSet(make_ids(n, prefix), std::move(labels), std::move(m), d);
}

/// Rows drawn from a small value grid so exact score ties are common.
inline EmbeddingSet tied_set(std::size_t n, std::size_t d, std::uint64_t seed,
                             const std::string& prefix = "t") {
  std::mt19937_64 gen(seed);
  std::uniform_int_distribution<int> u(-2, 2);
  std::vector<float> m(n * d);
  for (auto& v : m) v = static_cast<float>(u(gen)) * 0.5f;
  for (std::size_t i = 0; i < n; ++i) m[i * d] = 1.0f;  // never a zero row
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = 1 + static_cast<int>(i % 6);
  return EmbeddingSet(make_ids(n, prefix), std::move(labels), std::move(m), d);
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("cbir_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace cbir::testing
