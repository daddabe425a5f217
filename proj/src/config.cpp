#include "cbir/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "cbir/error.hpp"

namespace cbir {
namespace {

std::string_view trim(std::string_view s) {
  const auto ws = " \t\r";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

[[noreturn]] void parse_error(std::size_t line, const std::string& msg) {
  fail(Errc::ConfigParse, "line " + std::to_string(line) + ": " + msg);
}

std::vector<std::string> split_list(std::string_view value) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= value.size()) {
    const auto comma = value.find(',', start);
    const auto piece = trim(value.substr(
        start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (!piece.empty()) out.emplace_back(piece);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

template <typename T>
T parse_number(std::string_view text, std::size_t line, const char* what) {
  T value{};
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc{} || ptr != end) {
    parse_error(line, std::string("bad ") + what + ": '" + std::string(text) + "'");
  }
  return value;
}

double parse_real(std::string_view text, std::size_t line, const char* what) {
  std::string s(text);
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) {
    parse_error(line, std::string("bad ") + what + ": '" + s + "'");
  }
  return v;
}

std::string format_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  // Prefer the shortest form that still round-trips.
  for (int prec = 1; prec <= 17; ++prec) {
    char shorter[64];
    std::snprintf(shorter, sizeof shorter, "%.*g", prec, v);
    if (std::strtod(shorter, nullptr) == v) return shorter;
  }
  return buf;
}

template <typename T, typename F>
std::string join(const std::vector<T>& xs, F&& fmt) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ',';
    out += fmt(xs[i]);
  }
  return out;
}

MethodConfig& method_named(RunConfig& cfg, const std::string& name) {
  for (auto& m : cfg.methods) {
    if (m.name == name) return m;
  }
  cfg.methods.push_back(MethodConfig{});
  cfg.methods.back().name = name;
  return cfg.methods.back();
}

void set_method_field(RunConfig& cfg, const std::string& name,
                      std::string_view field, std::string_view value,
                      std::size_t line) {
  MethodConfig& m = method_named(cfg, name);
  const auto fusion = [&]() -> FusionSpec& {
    if (!m.fusion) m.fusion = FusionSpec{};
    return *m.fusion;
  };
  if (field == "database") {
    m.database = value;
  } else if (field == "database_manifest") {
    m.database_manifest = value;
  } else if (field == "queries") {
    m.queries = value;
  } else if (field == "queries_manifest") {
    m.queries_manifest = value;
  } else if (field == "fusion") {
    try {
      fusion().mode = parse_fusion_mode(value);
    } catch (const Error& e) {
      parse_error(line, e.what());
    }
  } else if (field == "components") {
    if (value == "auto") {
      m.auto_components = true;
      fusion().components.clear();
    } else {
      fusion().components = split_list(value);
    }
  } else if (field == "candidates") {
    m.candidates = split_list(value);
  } else if (field == "validation") {
    m.validation = value;
  } else if (field == "weights") {
    std::vector<double> w;
    for (const auto& piece : split_list(value)) w.push_back(parse_real(piece, line, "weight"));
    fusion().weights = std::move(w);
  } else if (field == "target_dim") {
    fusion().target_dim = parse_number<std::size_t>(value, line, "target_dim");
  } else {
    parse_error(line, "unknown method field '" + std::string(field) + "'");
  }
}

void validate(const RunConfig& cfg) {
  try {
    cfg.ratios.validate();
  } catch (const Error& e) {
    fail(Errc::ConfigParse, e.what());
  }
  if (cfg.K.empty()) fail(Errc::ConfigParse, "k list is empty");
  for (std::size_t k : cfg.K) {
    if (k == 0) fail(Errc::ConfigParse, "k values must be >= 1");
  }
  if (cfg.repeats < 1) fail(Errc::ConfigParse, "repeats must be >= 1");
  if (cfg.n_boot < 100) fail(Errc::ConfigParse, "n_boot must be >= 100");
  if (!(cfg.level > 0.0 && cfg.level < 1.0)) {
    fail(Errc::ConfigParse, "level must lie in (0,1)");
  }
  if (cfg.metrics.empty()) fail(Errc::ConfigParse, "no metric selected");
  std::set<std::string> seen;
  for (const auto& m : cfg.methods) {
    if (m.fusion) {
      try {
        m.fusion->validate();
      } catch (const Error& e) {
        fail(Errc::ConfigParse, "method " + m.name + ": " + e.what());
      }
      if (!m.auto_components && m.fusion->components.empty()) {
        fail(Errc::ConfigParse, "method " + m.name + ": fusion without components");
      }
      for (const auto& c : m.fusion->components) {
        if (!seen.contains(c)) {
          fail(Errc::ConfigParse, "method " + m.name + ": component '" + c +
                                      "' must be declared before it");
        }
      }
      for (const auto& c : m.candidates) {
        if (!seen.contains(c)) {
          fail(Errc::ConfigParse, "method " + m.name + ": candidate '" + c +
                                      "' must be declared before it");
        }
      }
      if (m.auto_components && m.fusion->mode != FusionMode::Concat) {
        fail(Errc::ConfigParse,
             "method " + m.name + ": components = auto requires fusion = concat");
      }
      if (!m.database.empty() || !m.queries.empty()) {
        fail(Errc::ConfigParse,
             "method " + m.name + ": fused methods take no embedding paths");
      }
    } else if (m.database.empty() || m.queries.empty()) {
      fail(Errc::ConfigParse,
           "method " + m.name + ": needs database and queries (or a fusion)");
    }
    seen.insert(m.name);
  }
}

}  // namespace

const MethodConfig* RunConfig::find(std::string_view name) const {
  for (const auto& m : methods) {
    if (m.name == name) return &m;
  }
  return nullptr;
}

std::filesystem::path RunConfig::resolve(const std::string& path) const {
  std::filesystem::path p(path);
  if (p.is_absolute() || base_dir.empty()) return p;
  return base_dir / p;
}

std::vector<Metric> parse_metric_list(std::string_view text) {
  if (text == "both") return {Metric::EuclideanL2, Metric::InnerProduct};
  std::vector<Metric> out;
  for (const auto& piece : split_list(text)) {
    const Metric m = parse_metric(piece);
    if (std::find(out.begin(), out.end(), m) == out.end()) out.push_back(m);
  }
  if (out.empty()) fail(Errc::InvalidArgument, "empty metric list");
  return out;
}

RunConfig parse_config(std::string_view text,
                       const std::filesystem::path& base_dir) {
  RunConfig cfg;
  cfg.base_dir = base_dir;
  std::set<std::string> keys_seen;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto nl = text.find('\n', start);
    const auto raw = text.substr(start, nl == std::string_view::npos ? std::string_view::npos
                                                                     : nl - start);
    start = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    const auto line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) parse_error(line_no, "expected key = value");
    const std::string key(trim(line.substr(0, eq)));
    const auto value = trim(line.substr(eq + 1));
    if (key.empty()) parse_error(line_no, "empty key");
    if (!keys_seen.insert(key).second) parse_error(line_no, "duplicate key '" + key + "'");

    try {
      if (key == "seed") {
        cfg.seed = parse_number<std::uint64_t>(value, line_no, "seed");
      } else if (key == "ratios") {
        const auto parts = split_list(value);
        if (parts.size() != 3) parse_error(line_no, "ratios needs three values");
        cfg.ratios = {parse_real(parts[0], line_no, "ratio"),
                      parse_real(parts[1], line_no, "ratio"),
                      parse_real(parts[2], line_no, "ratio")};
      } else if (key == "metric") {
        cfg.metrics = parse_metric_list(value);
      } else if (key == "k") {
        cfg.K.clear();
        for (const auto& piece : split_list(value)) {
          cfg.K.push_back(parse_number<std::size_t>(piece, line_no, "k"));
        }
      } else if (key == "repeats") {
        cfg.repeats = parse_number<std::size_t>(value, line_no, "repeats");
      } else if (key == "n_boot") {
        cfg.n_boot = parse_number<std::size_t>(value, line_no, "n_boot");
      } else if (key == "level") {
        cfg.level = parse_real(value, line_no, "level");
      } else if (key == "labels") {
        cfg.labels.clear();
        for (const auto& piece : split_list(value)) {
          cfg.labels.push_back(parse_number<int>(piece, line_no, "label"));
        }
      } else if (key.starts_with("method.")) {
        const std::string rest = key.substr(7);
        const auto dot = rest.rfind('.');
        if (dot == std::string::npos || dot == 0 || dot + 1 == rest.size()) {
          parse_error(line_no, "expected method.<name>.<field>");
        }
        set_method_field(cfg, rest.substr(0, dot), std::string_view(rest).substr(dot + 1),
                         value, line_no);
      } else {
        parse_error(line_no, "unknown key '" + key + "'");
      }
    } catch (const Error& e) {
      if (e.code() == Errc::ConfigParse) throw;
      parse_error(line_no, e.what());
    }
  }
  validate(cfg);
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::ConfigParse, "cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.parent_path());
}

std::string render_config(const RunConfig& cfg) {
  std::ostringstream os;
  os << "seed = " << cfg.seed << '\n';
  os << "ratios = " << format_real(cfg.ratios.train) << ',' << format_real(cfg.ratios.val)
     << ',' << format_real(cfg.ratios.test) << '\n';
  os << "metric = "
     << join(cfg.metrics, [](Metric m) { return std::string(metric_name(m)); }) << '\n';
  os << "k = " << join(cfg.K, [](std::size_t k) { return std::to_string(k); }) << '\n';
  os << "repeats = " << cfg.repeats << '\n';
  os << "n_boot = " << cfg.n_boot << '\n';
  os << "level = " << format_real(cfg.level) << '\n';
  os << "labels = " << join(cfg.labels, [](int l) { return std::to_string(l); }) << '\n';
  for (const auto& m : cfg.methods) {
    os << '\n';
    const std::string p = "method." + m.name + ".";
    if (!m.database.empty()) os << p << "database = " << m.database << '\n';
    if (!m.database_manifest.empty()) {
      os << p << "database_manifest = " << m.database_manifest << '\n';
    }
    if (!m.queries.empty()) os << p << "queries = " << m.queries << '\n';
    if (!m.queries_manifest.empty()) {
      os << p << "queries_manifest = " << m.queries_manifest << '\n';
    }
    if (m.fusion) {
      os << p << "fusion = " << fusion_mode_name(m.fusion->mode) << '\n';
      if (m.auto_components) {
        os << p << "components = auto\n";
      } else {
        os << p << "components = "
           << join(m.fusion->components, [](const std::string& s) { return s; }) << '\n';
      }
      if (m.fusion->weights) {
        os << p << "weights = " << join(*m.fusion->weights, format_real) << '\n';
      }
      if (m.fusion->target_dim) os << p << "target_dim = " << *m.fusion->target_dim << '\n';
    }
    if (!m.candidates.empty()) {
      os << p << "candidates = "
         << join(m.candidates, [](const std::string& s) { return s; }) << '\n';
    }
    if (!m.validation.empty()) os << p << "validation = " << m.validation << '\n';
  }
  return os.str();
}

}  // namespace cbir
