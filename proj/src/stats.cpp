#include "cbir/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "cbir/error.hpp"
#include "cbir/rng.hpp"

namespace cbir::stats {

double mean(std::span<const double> xs) {
  if (xs.empty()) return 0.0;
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

double sample_variance(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return ss / static_cast<double>(xs.size() - 1);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

namespace {

// Continued fraction for I_x(a,b), modified Lentz.
double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIter = 1000;
  constexpr double kEps = 1e-16;
  constexpr double kTiny = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) break;
  }
  return h;
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0 && b > 0.0)) fail(Errc::InvalidArgument, "incomplete_beta: a, b > 0");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                           a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return front * beta_continued_fraction(a, b, x) / a;
  }
  return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double student_t_two_sided(double t, double df) {
  if (!(df > 0.0)) fail(Errc::InvalidArgument, "student_t: df must be > 0");
  if (std::isinf(t)) return 0.0;
  const double x = df / (df + t * t);
  return std::clamp(incomplete_beta(0.5 * df, 0.5, x), 0.0, 1.0);
}

double student_t_cdf(double t, double df) {
  const double tail = 0.5 * student_t_two_sided(t, df);
  return t >= 0.0 ? 1.0 - tail : tail;
}

std::string_view test_kind_name(TestKind k) noexcept {
  return k == TestKind::PairedT ? "paired_t" : "mann_whitney_u";
}

double percentile_sorted(std::span<const double> sorted, double p) {
  if (sorted.empty()) fail(Errc::TooFewValues, "percentile of empty sample");
  const double h = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = h - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

BootstrapResult bootstrap_ci(std::span<const double> values, std::size_t n_boot,
                             double level, std::uint64_t seed) {
  if (values.size() < 2) fail(Errc::TooFewValues, "bootstrap_ci needs >= 2 values");
  if (n_boot < 100) fail(Errc::InvalidArgument, "bootstrap_ci needs n_boot >= 100");
  if (!(level > 0.0 && level < 1.0)) {
    fail(Errc::InvalidArgument, "bootstrap level must lie in (0,1)");
  }
  const std::size_t n = values.size();
  std::vector<double> means(n_boot);
  for (std::size_t r = 0; r < n_boot; ++r) {
    SplitMix64 rng(derive_seed(seed, r));
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += values[rng.below(n)];
    means[r] = s / static_cast<double>(n);
  }
  std::sort(means.begin(), means.end());
  BootstrapResult out;
  out.point_mean = mean(values);
  const double alpha = 1.0 - level;
  out.ci_low = percentile_sorted(means, alpha / 2.0);
  out.ci_high = percentile_sorted(means, 1.0 - alpha / 2.0);
  out.n = n;
  out.n_boot = n_boot;
  out.level = level;
  out.seed = seed;
  return out;
}

namespace {

// Cohen's d when it is defined, for attaching to a test result.
std::optional<double> maybe_d(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) return std::nullopt;
  try {
    return cohens_d(a, b);
  } catch (const Error&) {
    return std::nullopt;
  }
}

}  // namespace

TestResult paired_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    fail(Errc::LengthMismatch, "paired_t_test: " + std::to_string(a.size()) +
                                   " vs " + std::to_string(b.size()));
  }
  if (a.size() < 2) fail(Errc::TooFewValues, "paired_t_test needs n >= 2");
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  const double md = mean(d);
  const double sd = std::sqrt(sample_variance(d));
  TestResult out;
  out.kind = TestKind::PairedT;
  out.effect_size_d = maybe_d(a, b);
  if (sd <= 1e-12 * std::max(1.0, std::abs(md))) {
    if (md == 0.0) {
      out.statistic = 0.0;
      out.p_value = 1.0;
      return out;
    }
    fail(Errc::ZeroVariance, "paired differences are constant and nonzero");
  }
  const double n = static_cast<double>(d.size());
  out.statistic = md / (sd / std::sqrt(n));
  out.p_value = student_t_two_sided(out.statistic, n - 1.0);
  return out;
}

namespace {

struct RankInfo {
  double rank_sum_a = 0.0;
  double tie_term = 0.0;  // sum over tie groups of t^3 - t
  bool has_ties = false;
};

RankInfo midranks(std::span<const double> a, std::span<const double> b) {
  struct Item {
    double v;
    bool from_a;
  };
  std::vector<Item> pooled;
  pooled.reserve(a.size() + b.size());
  for (double x : a) pooled.push_back({x, true});
  for (double x : b) pooled.push_back({x, false});
  std::sort(pooled.begin(), pooled.end(),
            [](const Item& l, const Item& r) { return l.v < r.v; });
  RankInfo info;
  for (std::size_t i = 0; i < pooled.size();) {
    std::size_t j = i;
    while (j < pooled.size() && pooled[j].v == pooled[i].v) ++j;
    const double t = static_cast<double>(j - i);
    const double rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k) {
      if (pooled[k].from_a) info.rank_sum_a += rank;
    }
    if (j - i > 1) {
      info.has_ties = true;
      info.tie_term += t * t * t - t;
    }
    i = j;
  }
  return info;
}

}  // namespace

double mann_whitney_statistic(std::span<const double> a,
                              std::span<const double> b) {
  const RankInfo info = midranks(a, b);
  const double na = static_cast<double>(a.size());
  return info.rank_sum_a - na * (na + 1.0) / 2.0;
}

double mann_whitney_exact_p(std::size_t n_a, std::size_t n_b, double u) {
  const std::size_t umax = n_a * n_b;
  // counts[m][n] is the distribution of U over u = 0..m*n.
  std::vector<std::vector<std::vector<std::uint64_t>>> counts(
      n_a + 1, std::vector<std::vector<std::uint64_t>>(n_b + 1));
  for (std::size_t m = 0; m <= n_a; ++m) {
    for (std::size_t n = 0; n <= n_b; ++n) {
      auto& c = counts[m][n];
      c.assign(m * n + 1, 0);
      if (m == 0 || n == 0) {
        c[0] = 1;
        continue;
      }
      // Largest pooled value belongs to a (beats all n of b) or to b.
      const auto& with_a = counts[m - 1][n];
      for (std::size_t v = 0; v < with_a.size(); ++v) c[v + n] += with_a[v];
      const auto& with_b = counts[m][n - 1];
      for (std::size_t v = 0; v < with_b.size(); ++v) c[v] += with_b[v];
    }
  }
  const auto& dist = counts[n_a][n_b];
  const auto target = static_cast<std::size_t>(std::llround(u));
  std::uint64_t total = 0;
  std::uint64_t le = 0;
  std::uint64_t ge = 0;
  for (std::size_t v = 0; v <= umax; ++v) {
    total += dist[v];
    if (v <= target) le += dist[v];
    if (v >= target) ge += dist[v];
  }
  const double p = 2.0 * static_cast<double>(std::min(le, ge)) /
                   static_cast<double>(total);
  return std::min(1.0, p);
}

TestResult mann_whitney_u(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) fail(Errc::EmptySample, "mann_whitney_u");
  const RankInfo info = midranks(a, b);
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  TestResult out;
  out.kind = TestKind::MannWhitneyU;
  out.effect_size_d = maybe_d(a, b);
  out.statistic = info.rank_sum_a - na * (na + 1.0) / 2.0;
  if (!info.has_ties && a.size() + b.size() <= kMannWhitneyExactLimit) {
    out.exact = true;
    out.p_value = mann_whitney_exact_p(a.size(), b.size(), out.statistic);
    return out;
  }
  const double nn = na + nb;
  const double var =
      na * nb / 12.0 * ((nn + 1.0) - info.tie_term / (nn * (nn - 1.0)));
  if (!(var > 0.0)) {
    out.p_value = 1.0;
    return out;
  }
  const double mu = na * nb / 2.0;
  const double z = std::max(0.0, std::abs(out.statistic - mu) - 0.5) / std::sqrt(var);
  out.p_value = std::clamp(std::erfc(z / std::sqrt(2.0)), 0.0, 1.0);
  return out;
}

double cohens_d(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) {
    fail(Errc::TooFewValues, "cohens_d needs >= 2 values per sample");
  }
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double pooled = std::sqrt(((na - 1.0) * sample_variance(a) +
                                   (nb - 1.0) * sample_variance(b)) /
                                  (na + nb - 2.0));
  if (!(pooled > 0.0)) fail(Errc::ZeroPooledVariance, "cohens_d");
  return (mean(a) - mean(b)) / pooled;
}

}  // namespace cbir::stats
