#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace cbir::stats {

double mean(std::span<const double> xs);
/// Unbiased (n-1) sample variance; 0 for fewer than two values.
double sample_variance(std::span<const double> xs);

// Special functions. Absolute error <= 1e-8 over the ranges used here.
double normal_cdf(double x);
/// Regularized incomplete beta I_x(a, b): Lentz continued fraction.
double incomplete_beta(double a, double b, double x);
/// P(T <= t) for Student's t with df degrees of freedom.
double student_t_cdf(double t, double df);
/// Two-sided tail probability P(|T| >= |t|).
double student_t_two_sided(double t, double df);

struct BootstrapResult {
  double point_mean = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::size_t n = 0;
  std::size_t n_boot = 0;
  double level = 0.95;
  std::uint64_t seed = 0;
};

/// Linear interpolation between order statistics of an ascending vector
/// (position p * (size - 1)).
double percentile_sorted(std::span<const double> sorted, double p);

/// Percentile bootstrap for the mean. Replicate r draws from
/// splitmix64(derive_seed(seed, r)).
BootstrapResult bootstrap_ci(std::span<const double> values,
                             std::size_t n_boot = 1000, double level = 0.95,
                             std::uint64_t seed = 42);

enum class TestKind { PairedT, MannWhitneyU };
std::string_view test_kind_name(TestKind k) noexcept;

struct TestResult {
  double statistic = 0.0;
  double p_value = 1.0;
  TestKind kind = TestKind::PairedT;
  std::optional<double> effect_size_d;
  /// Mann-Whitney only: whether the exact small-sample distribution was used.
  bool exact = false;
};

/// t on per-pair differences a - b, two-sided p with n-1 df.
TestResult paired_t_test(std::span<const double> a, std::span<const double> b);

/// U for sample a (pairs with a > b, ties count half) from midranks.
double mann_whitney_statistic(std::span<const double> a,
                              std::span<const double> b);

/// Exact two-sided p for an untied U by the counting recurrence
/// c(m, n, u) = c(m-1, n, u-n) + c(m, n-1, u).
double mann_whitney_exact_p(std::size_t n_a, std::size_t n_b, double u);

/// Two-sided test. Exact distribution when n_a + n_b <= 12 and there are
/// no ties; otherwise normal approximation with tie and continuity
/// corrections.
TestResult mann_whitney_u(std::span<const double> a, std::span<const double> b);

inline constexpr std::size_t kMannWhitneyExactLimit = 12;

/// (mean(a) - mean(b)) / pooled sd.
double cohens_d(std::span<const double> a, std::span<const double> b);

}  // namespace cbir::stats
