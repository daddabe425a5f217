#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "cbir/error.hpp"
#include "cbir/kernels.hpp"

using namespace cbir;
using namespace cbir::kernels;

namespace {

std::vector<float> random_floats(std::size_t n, std::mt19937_64& gen) {
  std::uniform_real_distribution<float> u(-2.0f, 2.0f);
  std::vector<float> v(n);
  for (auto& x : v) x = u(gen);
  return v;
}

long double ref_dot(const float* a, const float* b, std::size_t d) {
  long double s = 0;
  for (std::size_t i = 0; i < d; ++i) s += static_cast<long double>(a[i]) * b[i];
  return s;
}

long double ref_l2(const float* a, const float* b, std::size_t d) {
  long double s = 0;
  for (std::size_t i = 0; i < d; ++i) {
    const long double t = static_cast<long double>(a[i]) - b[i];
    s += t * t;
  }
  return s;
}

double scale(const float* a, const float* b, std::size_t d) {
  double s = 1.0;
  for (std::size_t i = 0; i < d; ++i) s += std::abs(double(a[i]) * b[i]) + double(a[i]) * a[i] + double(b[i]) * b[i];
  return s;
}

const std::size_t kDims[] = {0, 1, 2, 3, 7, 8, 9, 15, 16, 17, 31, 32, 33, 63, 64, 65, 100, 1024, 3072};

}  // namespace

TEST(Kernels, ScalarIsAlwaysAvailableAndFirst) {
  const auto isas = available_isas();
  ASSERT_FALSE(isas.empty());
  EXPECT_EQ(isas.front(), Isa::Scalar);
  EXPECT_EQ(table_for(Isa::Scalar).isa, Isa::Scalar);
}

TEST(Kernels, UnavailableIsaThrows) {
  const auto isas = available_isas();
  for (Isa isa : {Isa::Avx2, Isa::Avx512, Isa::Neon}) {
    if (std::find(isas.begin(), isas.end(), isa) != isas.end()) continue;
    EXPECT_THROW(table_for(isa), Error);
  }
}

TEST(Kernels, ActiveIsWidestUnlessOverridden) {
  reset_active();
  EXPECT_EQ(active().isa, available_isas().back());
  set_active(Isa::Scalar);
  EXPECT_EQ(active().isa, Isa::Scalar);
  reset_active();
  EXPECT_EQ(active().isa, available_isas().back());
}

TEST(Kernels, ScalarMatchesExtendedPrecision) {
  std::mt19937_64 gen(7);
  const auto& t = table_for(Isa::Scalar);
  for (std::size_t d : kDims) {
    const auto a = random_floats(d, gen), b = random_floats(d, gen);
    const double tol = 1e-13 * scale(a.data(), b.data(), d);
    EXPECT_NEAR(t.dot(a.data(), b.data(), d), double(ref_dot(a.data(), b.data(), d)), tol) << d;
    EXPECT_NEAR(t.l2sqr(a.data(), b.data(), d), double(ref_l2(a.data(), b.data(), d)), tol) << d;
  }
}

class IsaEquivalence : public ::testing::TestWithParam<Isa> {};

TEST_P(IsaEquivalence, ReductionsMatchScalar) {
  const auto& ref = table_for(Isa::Scalar);
  const auto& t = table_for(GetParam());
  std::mt19937_64 gen(11);
  for (std::size_t d : kDims) {
    for (int rep = 0; rep < 5; ++rep) {
      const auto a = random_floats(d, gen), b = random_floats(d, gen);
      const double tol = 1e-13 * scale(a.data(), b.data(), d);
      EXPECT_NEAR(t.dot(a.data(), b.data(), d), ref.dot(a.data(), b.data(), d), tol) << d;
      EXPECT_NEAR(t.l2sqr(a.data(), b.data(), d), ref.l2sqr(a.data(), b.data(), d), tol) << d;
    }
  }
}

TEST_P(IsaEquivalence, BatchedMatchesSingle) {
  const auto& t = table_for(GetParam());
  std::mt19937_64 gen(13);
  for (std::size_t d : {1u, 5u, 16u, 37u, 128u}) {
    const std::size_t n = 23;
    const auto q = random_floats(d, gen);
    const auto rows = random_floats(n * d, gen);
    std::vector<double> dots(n), l2s(n);
    t.dot_many(q.data(), rows.data(), n, d, dots.data());
    t.l2sqr_many(q.data(), rows.data(), n, d, l2s.data());
    for (std::size_t i = 0; i < n; ++i) {
      EXPECT_EQ(dots[i], t.dot(q.data(), rows.data() + i * d, d));
      EXPECT_EQ(l2s[i], t.l2sqr(q.data(), rows.data() + i * d, d));
    }
  }
}

INSTANTIATE_TEST_SUITE_P(
    All, IsaEquivalence, ::testing::ValuesIn(available_isas()),
    [](const ::testing::TestParamInfo<Isa>& info) { return std::string(isa_name(info.param)); });
