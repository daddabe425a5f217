#include "cbir/store.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "cbir/error.hpp"

namespace cbir {
namespace {

constexpr std::array<char, 4> kMagic{'M', 'E', 'I', 'R'};

template <typename T>
void put_le(std::string& buf, T value) {
  using U = std::make_unsigned_t<T>;
  auto u = static_cast<U>(value);
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    buf.push_back(static_cast<char>(u & 0xFFu));
    u = static_cast<U>(u >> 8);
  }
}

template <typename T>
T get_le(const unsigned char* p) {
  std::make_unsigned_t<T> u = 0;
  for (std::size_t i = sizeof(T); i-- > 0;) {
    u = static_cast<decltype(u)>((u << 8) | p[i]);
  }
  return static_cast<T>(u);
}

std::string format_row_col(std::size_t r, std::size_t c) {
  return "row " + std::to_string(r) + ", col " + std::to_string(c);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

int parse_label(const std::string& text, const std::filesystem::path& path,
                std::size_t line_no) {
  std::size_t pos = 0;
  int value = 0;
  try {
    value = std::stoi(text, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != text.size()) {
    fail(Errc::UnknownLabel, path.string() + ":" + std::to_string(line_no) +
                                 ": label is not an integer: '" + text + "'");
  }
  return value;
}

bool csv_safe(const std::string& s) {
  return s.find_first_of(",\"\r\n") == std::string::npos;
}

}  // namespace

OverlapError::OverlapError(std::vector<std::string> ids)
    : Error(Errc::OverlapDetected,
            [&] {
              std::string msg = std::to_string(ids.size()) +
                                " id(s) shared between query and database:";
              for (std::size_t i = 0; i < ids.size() && i < 20; ++i) {
                msg += ' ';
                msg += ids[i];
              }
              if (ids.size() > 20) msg += " ...";
              return msg;
            }()),
      ids_(std::move(ids)) {}

LabelSpace::LabelSpace() : classes_{1, 2, 3, 4, 5, 6} {}

LabelSpace::LabelSpace(std::vector<int> classes) : classes_(std::move(classes)) {
  if (classes_.empty()) fail(Errc::InvalidArgument, "empty label space");
  std::sort(classes_.begin(), classes_.end());
  if (std::adjacent_find(classes_.begin(), classes_.end()) != classes_.end()) {
    fail(Errc::InvalidArgument, "label space has duplicate classes");
  }
}

bool LabelSpace::contains(int label) const noexcept {
  return std::binary_search(classes_.begin(), classes_.end(), label);
}

EmbeddingSet::EmbeddingSet(std::vector<std::string> ids,
                           std::vector<int> labels, std::vector<float> matrix,
                           std::size_t dim)
    : ids_(std::move(ids)),
      labels_(std::move(labels)),
      matrix_(std::move(matrix)),
      dim_(dim),
      normalized_(true) {
  if (ids_.empty()) fail(Errc::EmptySet, "embedding set has no rows");
  if (dim_ == 0) fail(Errc::InvalidArgument, "embedding dim must be >= 1");
  if (labels_.size() != ids_.size()) {
    fail(Errc::CountMismatch, std::to_string(ids_.size()) + " ids but " +
                                  std::to_string(labels_.size()) + " labels");
  }
  if (matrix_.size() != ids_.size() * dim_) {
    fail(Errc::CountMismatch,
         "matrix has " + std::to_string(matrix_.size()) + " values, expected " +
             std::to_string(ids_.size()) + " x " + std::to_string(dim_));
  }
  std::unordered_set<std::string_view> seen;
  seen.reserve(ids_.size());
  for (const auto& id : ids_) {
    if (!seen.insert(id).second) fail(Errc::DuplicateId, "duplicate id: " + id);
  }
  const std::size_t n = ids_.size();
  for (std::size_t r = 0; r < n; ++r) {
    double sq = 0.0;
    for (std::size_t c = 0; c < dim_; ++c) {
      const float v = matrix_[r * dim_ + c];
      if (!std::isfinite(v)) {
        fail(Errc::NonFiniteValue, "non-finite value at " + format_row_col(r, c));
      }
      sq += static_cast<double>(v) * static_cast<double>(v);
    }
    if (std::abs(std::sqrt(sq) - 1.0) > kUnitNormTolerance) normalized_ = false;
  }
}

MatrixFile read_matrix(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::IoFailure, "cannot open " + path.string());
  std::array<unsigned char, kMeirHeaderBytes> header{};
  in.read(reinterpret_cast<char*>(header.data()), header.size());
  if (in.gcount() < 4 ||
      std::memcmp(header.data(), kMagic.data(), kMagic.size()) != 0) {
    fail(Errc::BadMagic, path.string() + ": not a .meir file");
  }
  if (in.gcount() != static_cast<std::streamsize>(header.size())) {
    fail(Errc::IoFailure, path.string() + ": truncated header");
  }
  const auto version = get_le<std::uint16_t>(header.data() + 4);
  if (version != kMeirVersion) {
    fail(Errc::VersionUnsupported,
         path.string() + ": version " + std::to_string(version));
  }
  MatrixFile out;
  out.rows = get_le<std::uint64_t>(header.data() + 8);
  out.cols = get_le<std::uint64_t>(header.data() + 16);
  const auto file_size = std::filesystem::file_size(path);
  if (out.cols != 0 && out.rows > (file_size / 4) / out.cols) {
    fail(Errc::IoFailure, path.string() + ": payload shorter than header claims");
  }
  const std::size_t count = static_cast<std::size_t>(out.rows * out.cols);
  if (file_size != kMeirHeaderBytes + count * 4) {
    fail(Errc::IoFailure, path.string() + ": payload is " +
                              std::to_string(file_size - kMeirHeaderBytes) +
                              " bytes, expected " + std::to_string(count * 4));
  }
  std::vector<unsigned char> payload(count * 4);
  in.read(reinterpret_cast<char*>(payload.data()),
          static_cast<std::streamsize>(payload.size()));
  if (static_cast<std::size_t>(in.gcount()) != payload.size()) {
    fail(Errc::IoFailure, path.string() + ": short read");
  }
  out.data.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    out.data[i] = std::bit_cast<float>(get_le<std::uint32_t>(&payload[i * 4]));
  }
  return out;
}

void write_matrix(const std::filesystem::path& path, std::uint64_t rows,
                  std::uint64_t cols, std::span<const float> data) {
  if (data.size() != rows * cols) {
    fail(Errc::CountMismatch, "matrix payload does not match rows x cols");
  }
  std::string buf;
  buf.reserve(kMeirHeaderBytes + data.size() * 4);
  buf.append(kMagic.data(), kMagic.size());
  put_le<std::uint16_t>(buf, kMeirVersion);
  put_le<std::uint16_t>(buf, 0);
  put_le<std::uint64_t>(buf, rows);
  put_le<std::uint64_t>(buf, cols);
  for (float v : data) put_le<std::uint32_t>(buf, std::bit_cast<std::uint32_t>(v));
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(Errc::IoFailure, "cannot write " + path.string());
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) fail(Errc::IoFailure, "write failed: " + path.string());
}

Manifest read_manifest(const std::filesystem::path& path,
                       const LabelSpace& space) {
  std::ifstream in(path);
  if (!in) fail(Errc::IoFailure, "cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) {
    fail(Errc::IoFailure, path.string() + ": empty manifest");
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_csv_line(line);
  if (header.size() < 2 || header[0] != "item_id" || header[1] != "label") {
    fail(Errc::IoFailure,
         path.string() + ": manifest header must start with item_id,label");
  }
  Manifest manifest;
  std::unordered_set<std::string> seen;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    if (fields.size() < 2) {
      fail(Errc::IoFailure,
           path.string() + ":" + std::to_string(line_no) + ": too few fields");
    }
    ManifestRow row{fields[0], parse_label(fields[1], path, line_no),
                    fields.size() > 2 ? fields[2] : std::string{}};
    if (!space.contains(row.label)) {
      fail(Errc::UnknownLabel, path.string() + ":" + std::to_string(line_no) +
                                   ": label " + std::to_string(row.label));
    }
    if (!seen.insert(row.item_id).second) {
      fail(Errc::DuplicateId, path.string() + ":" + std::to_string(line_no) +
                                  ": duplicate id " + row.item_id);
    }
    manifest.rows.push_back(std::move(row));
  }
  return manifest;
}

void write_manifest(const std::filesystem::path& path,
                    const Manifest& manifest) {
  const bool with_source =
      std::any_of(manifest.rows.begin(), manifest.rows.end(),
                  [](const ManifestRow& r) { return !r.source_path.empty(); });
  std::string buf = with_source ? "item_id,label,source_path\n" : "item_id,label\n";
  for (const auto& row : manifest.rows) {
    if (!csv_safe(row.item_id) || !csv_safe(row.source_path)) {
      fail(Errc::InvalidArgument,
           "id or path contains a CSV delimiter: " + row.item_id);
    }
    buf += row.item_id;
    buf += ',';
    buf += std::to_string(row.label);
    if (with_source) {
      buf += ',';
      buf += row.source_path;
    }
    buf += '\n';
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(Errc::IoFailure, "cannot write " + path.string());
  out << buf;
  if (!out) fail(Errc::IoFailure, "write failed: " + path.string());
}

EmbeddingSet load_embedding_set(const std::filesystem::path& matrix_path,
                                const std::filesystem::path& manifest_path,
                                const LabelSpace& space) {
  MatrixFile m = read_matrix(matrix_path);
  Manifest manifest = read_manifest(manifest_path, space);
  if (manifest.rows.size() != m.rows) {
    fail(Errc::CountMismatch,
         "manifest " + manifest_path.string() + " has " +
             std::to_string(manifest.rows.size()) + " rows, matrix has " +
             std::to_string(m.rows));
  }
  std::vector<std::string> ids;
  std::vector<int> labels;
  ids.reserve(manifest.rows.size());
  labels.reserve(manifest.rows.size());
  for (auto& row : manifest.rows) {
    ids.push_back(std::move(row.item_id));
    labels.push_back(row.label);
  }
  return EmbeddingSet(std::move(ids), std::move(labels), std::move(m.data),
                      static_cast<std::size_t>(m.cols));
}

void save_embedding_set(const EmbeddingSet& set,
                        const std::filesystem::path& matrix_path,
                        const std::filesystem::path& manifest_path) {
  Manifest manifest;
  manifest.rows.reserve(set.size());
  for (std::size_t i = 0; i < set.size(); ++i) {
    manifest.rows.push_back({set.ids()[i], set.labels()[i], {}});
  }
  write_matrix(matrix_path, set.size(), set.dim(), set.matrix());
  write_manifest(manifest_path, manifest);
}

std::filesystem::path default_manifest_path(
    const std::filesystem::path& matrix_path) {
  auto p = matrix_path;
  p.replace_extension(".csv");
  return p;
}

EmbeddingSet l2_normalize(const EmbeddingSet& set) {
  const std::size_t n = set.size();
  const std::size_t d = set.dim();
  std::vector<float> out(set.matrix().begin(), set.matrix().end());
  for (std::size_t r = 0; r < n; ++r) {
    double sq = 0.0;
    for (std::size_t c = 0; c < d; ++c) {
      const double v = out[r * d + c];
      sq += v * v;
    }
    const double norm = std::sqrt(sq);
    if (norm < 1e-12) {
      fail(Errc::ZeroVector, "row " + std::to_string(r) + " (" + set.ids()[r] +
                                 ") has near-zero norm");
    }
    for (std::size_t c = 0; c < d; ++c) {
      out[r * d + c] = static_cast<float>(out[r * d + c] / norm);
    }
  }
  return EmbeddingSet(set.ids(), set.labels(), std::move(out), d);
}

std::vector<std::string> shared_ids(const EmbeddingSet& a,
                                    const EmbeddingSet& b) {
  const auto& small = a.size() <= b.size() ? a.ids() : b.ids();
  const auto& large = a.size() <= b.size() ? b.ids() : a.ids();
  std::unordered_set<std::string_view> index(large.begin(), large.end());
  std::vector<std::string> out;
  for (const auto& id : small) {
    if (index.contains(id)) out.push_back(id);
  }
  std::sort(out.begin(), out.end());
  return out;
}

void assert_disjoint(const EmbeddingSet& a, const EmbeddingSet& b) {
  auto ids = shared_ids(a, b);
  if (!ids.empty()) throw OverlapError(std::move(ids));
}

}  // namespace cbir
