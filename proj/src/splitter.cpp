#include "cbir/splitter.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "cbir/error.hpp"
#include "cbir/rng.hpp"

namespace cbir {

std::string_view partition_name(Partition p) noexcept {
  switch (p) {
    case Partition::Train: return "train";
    case Partition::Val: return "val";
    case Partition::Test: return "test";
  }
  return "?";
}

void SplitRatios::validate() const {
  for (double r : as_array()) {
    if (!(r > 0.0 && r < 1.0)) {
      fail(Errc::InvalidArgument, "split ratios must each lie in (0,1)");
    }
  }
  if (std::abs(train + val + test - 1.0) > 1e-9) {
    fail(Errc::InvalidArgument, "split ratios must sum to 1");
  }
}

std::array<std::size_t, 3> allocate_counts(std::size_t class_size,
                                           const SplitRatios& ratios) {
  const auto r = ratios.as_array();
  std::array<std::size_t, 3> counts{};
  std::array<double, 3> remainder{};
  std::size_t assigned = 0;
  for (std::size_t p = 0; p < 3; ++p) {
    const double exact = r[p] * static_cast<double>(class_size);
    // 1e-9 absorbs products like 0.3 * 10 landing just under the integer.
    const double whole = std::floor(exact + 1e-9);
    counts[p] = static_cast<std::size_t>(whole);
    remainder[p] = std::max(0.0, exact - whole);
    assigned += counts[p];
  }
  std::array<std::size_t, 3> order{0, 1, 2};
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return remainder[a] > remainder[b];
  });
  for (std::size_t i = 0; assigned < class_size; ++i, ++assigned) {
    ++counts[order[i % 3]];
  }
  return counts;
}

SplitAssignment stratified_split(const Manifest& manifest,
                                 const SplitRatios& ratios,
                                 std::uint64_t seed) {
  ratios.validate();
  if (manifest.rows.empty()) fail(Errc::EmptyClass, "manifest has no rows");

  std::map<int, std::vector<std::string>> by_class;
  std::unordered_set<std::string> seen;
  for (const auto& row : manifest.rows) {
    if (!seen.insert(row.item_id).second) fail(Errc::DuplicateId, "duplicate id: " + row.item_id);
    by_class[row.label].push_back(row.item_id);
  }

  SplitAssignment out;
  out.seed = seed;
  std::unordered_map<std::string, Partition> where;
  where.reserve(manifest.rows.size());

  for (auto& [label, ids] : by_class) {
    if (ids.empty()) fail(Errc::EmptyClass, "class " + std::to_string(label));
    std::sort(ids.begin(), ids.end());
    SplitMix64 rng(seed ^ mix64(static_cast<std::uint64_t>(
                              static_cast<std::int64_t>(label))));
    for (std::size_t i = ids.size(); i-- > 1;) {
      const std::size_t j = static_cast<std::size_t>(rng.below(i + 1));
      std::swap(ids[i], ids[j]);
    }
    const auto counts = allocate_counts(ids.size(), ratios);
    out.per_class_counts[label] = counts;
    if (ids.size() >= 3) {
      for (std::size_t p = 0; p < 3; ++p) {
        if (counts[p] == 0) {
          out.warnings.push_back(
              "DegenerateRatio: class " + std::to_string(label) + " (" +
              std::to_string(ids.size()) + " items) gives 0 items to " +
              std::string(partition_name(static_cast<Partition>(p))));
        }
      }
    }
    std::size_t pos = 0;
    for (std::size_t p = 0; p < 3; ++p) {
      for (std::size_t c = 0; c < counts[p]; ++c, ++pos) {
        where.emplace(ids[pos], static_cast<Partition>(p));
      }
    }
  }

  out.ids.reserve(manifest.rows.size());
  out.partitions.reserve(manifest.rows.size());
  for (const auto& row : manifest.rows) {
    out.ids.push_back(row.item_id);
    out.partitions.push_back(where.at(row.item_id));
  }
  return out;
}

std::string render_split_csv(const SplitAssignment& split) {
  std::string buf = "item_id,partition\n";
  for (std::size_t i = 0; i < split.ids.size(); ++i) {
    buf += split.ids[i];
    buf += ',';
    buf += partition_name(split.partitions[i]);
    buf += '\n';
  }
  return buf;
}

void write_split_csv(const std::filesystem::path& path,
                     const SplitAssignment& split) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(Errc::IoFailure, "cannot write " + path.string());
  out << render_split_csv(split);
  if (!out) fail(Errc::IoFailure, "write failed: " + path.string());
}

std::string render_split_table(const SplitAssignment& split) {
  std::ostringstream os;
  os << "Split";
  for (const auto& [label, counts] : split.per_class_counts) {
    os << "\tClass " << label;
  }
  os << "\tTotal\n";
  for (std::size_t p = 0; p < 3; ++p) {
    std::string name(partition_name(static_cast<Partition>(p)));
    name[0] = static_cast<char>(std::toupper(name[0]));
    os << name;
    std::size_t total = 0;
    for (const auto& [label, counts] : split.per_class_counts) {
      os << '\t' << counts[p];
      total += counts[p];
    }
    os << '\t' << total << '\n';
  }
  return os.str();
}

}  // namespace cbir
