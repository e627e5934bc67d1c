#include "eqloss/svd.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "test_support.hpp"

namespace eqloss {
namespace {

void expect_valid_svd(const Matrix& a, const SvdResult& s) {
  const std::size_t k = std::min(a.rows(), a.cols());
  ASSERT_EQ(s.sigma.size(), k);
  ASSERT_EQ(s.u.rows(), a.rows());
  ASSERT_EQ(s.u.cols(), k);
  ASSERT_EQ(s.v.rows(), a.cols());
  ASSERT_EQ(s.v.cols(), k);
  for (std::size_t t = 0; t < k; ++t) {
    EXPECT_GE(s.sigma[t], 0.0);
    if (t + 1 < k) EXPECT_GE(s.sigma[t], s.sigma[t + 1]);
  }
  const double scale = std::max(1.0, s.sigma.empty() ? 0.0 : s.sigma[0]);
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) {
      double x = 0.0;
      for (std::size_t t = 0; t < k; ++t) x += s.u(i, t) * s.sigma[t] * s.v(j, t);
      EXPECT_NEAR(x, a(i, j), 1e-9 * scale);
    }
  auto orthonormal = [](const Matrix& m) {
    for (std::size_t p = 0; p < m.cols(); ++p)
      for (std::size_t q = 0; q < m.cols(); ++q) {
        double d = 0.0;
        for (std::size_t i = 0; i < m.rows(); ++i) d += m(i, p) * m(i, q);
        EXPECT_NEAR(d, p == q ? 1.0 : 0.0, 1e-9);
      }
  };
  orthonormal(s.u);
  orthonormal(s.v);
  // Sign rule: the largest-magnitude entry of each U column is non-negative.
  for (std::size_t t = 0; t < k; ++t) {
    double best = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i)
      if (std::abs(s.u(i, t)) > std::abs(best)) best = s.u(i, t);
    EXPECT_GE(best, 0.0);
  }
}

TEST(SvdTest, Identity) {
  const Matrix a = Matrix::from_rows({{1, 0}, {0, 1}});
  const auto s = jacobi_svd(a);
  EXPECT_NEAR(s.sigma[0], 1.0, 1e-15);
  EXPECT_NEAR(s.sigma[1], 1.0, 1e-15);
  expect_valid_svd(a, s);
}

TEST(SvdTest, UniformIsRankOne) {
  Matrix a(4, 2);
  for (double& x : a.data()) x = 0.5;
  const auto s = jacobi_svd(a);
  EXPECT_NEAR(s.sigma[0], std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(s.sigma[1], 0.0, 1e-12);
  expect_valid_svd(a, s);
}

TEST(SvdTest, ZeroColumnCompletesU) {
  const Matrix a = Matrix::from_rows({{1, 0}, {1, 0}, {1, 0}, {1, 0}});
  const auto s = jacobi_svd(a);
  EXPECT_NEAR(s.sigma[0], 2.0, 1e-12);
  EXPECT_EQ(s.sigma[1], 0.0);
  expect_valid_svd(a, s);
}

TEST(SvdTest, AllZero) {
  const Matrix a(3, 2);
  const auto s = jacobi_svd(a);
  EXPECT_EQ(s.sigma, (std::vector<double>{0.0, 0.0}));
  expect_valid_svd(a, s);
}

TEST(SvdTest, WideMatrix) {
  const Matrix a = Matrix::from_rows({{0.2, 0.3, 0.5}, {0.6, 0.1, 0.3}});
  expect_valid_svd(a, jacobi_svd(a));
}

TEST(SvdTest, MatchesTwoColumnClosedForm) {
  Rng rng(21);
  for (int t = 0; t < 100; ++t) {
    const Matrix a = testing::random_interior(rng, 2 + rng.below(8), 2, 0.0);
    const auto s = jacobi_svd(a);
    const auto expect = testing::two_column_singular_values(a);
    EXPECT_NEAR(s.sigma[0], expect[0], 1e-12);
    EXPECT_NEAR(s.sigma[1], expect[1], 1e-7);
    expect_valid_svd(a, s);
  }
}

TEST(SvdTest, RandomShapesSatisfyInvariants) {
  Rng rng(22);
  for (int t = 0; t < 1000; ++t) {
    const std::size_t b = 1 + rng.below(12), c = 2 + rng.below(7);
    Matrix a = testing::random_interior(rng, b, c, 0.0);
    // Duplicate rows and zero columns produce repeated or vanishing values.
    if (t % 3 == 0 && b > 1) std::copy(a.row(0).begin(), a.row(0).end(), a.row(1).begin());
    if (t % 5 == 0)
      for (std::size_t i = 0; i < b; ++i) a(i, 0) = 0.0;
    expect_valid_svd(a, jacobi_svd(a));
  }
}

TEST(SvdTest, NuclearNormIsSumOfSigma) {
  const Matrix a = Matrix::from_rows({{1, 0}, {1, 0}, {1, 0}, {0, 1}});
  EXPECT_NEAR(nuclear_norm_of(a), 1.0 + std::sqrt(3.0), 1e-12);
}

TEST(SvdTest, Deterministic) {
  Rng rng(4);
  const Matrix a = testing::random_interior(rng, 9, 4, 0.0);
  const auto s1 = jacobi_svd(a);
  const auto s2 = jacobi_svd(a);
  EXPECT_EQ(s1.sigma, s2.sigma);
  EXPECT_EQ(s1.u, s2.u);
  EXPECT_EQ(s1.v, s2.v);
}

}  // namespace
}  // namespace eqloss
