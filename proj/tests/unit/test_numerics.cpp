#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <vector>

#include "walkrl/errors.hpp"
#include "walkrl/numerics/matrix.hpp"
#include "walkrl/numerics/rng.hpp"
#include "walkrl/numerics/stats.hpp"

using namespace walkrl;

TEST(Rng, SameSeedAndStreamRepeat) {
  RngStream a(42, 7), b(42, 7);
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(a.next_u64(), b.next_u64());
}

TEST(Rng, StreamsAndSeedsDiffer) {
  RngStream a(42, 7), b(42, 8), c(43, 7);
  int same_b = 0, same_c = 0;
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next_u64();
    same_b += x == b.next_u64();
    same_c += x == c.next_u64();
  }
  EXPECT_EQ(same_b, 0);
  EXPECT_EQ(same_c, 0);
}

TEST(Rng, SeekReplaysDraws) {
  RngStream a(5, 9);
  std::vector<double> first;
  for (int i = 0; i < 20; ++i) first.push_back(a.uniform());
  RngStream b(5, 9);
  b.seek(10);
  for (int i = 10; i < 20; ++i) EXPECT_EQ(b.uniform(), first[i]);
}

TEST(Rng, DeriveStreamIsPure) {
  EXPECT_EQ(derive_stream(1, 2, 3), derive_stream(1, 2, 3));
  EXPECT_NE(derive_stream(1, 2, 3), derive_stream(1, 3, 2));
  EXPECT_NE(derive_stream(1, 2), derive_stream(2, 1));
}

// chi-square critical values at p = 0.001 come from the oracle script
TEST(Rng, UniformPassesChiSquare) {
  constexpr int kBins = 20;
  constexpr int kDraws = 200000;
  RngStream rng(2024, 1);
  std::array<int, kBins> counts{};
  for (int i = 0; i < kDraws; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    ++counts[static_cast<int>(u * kBins)];
  }
  const double expected = static_cast<double>(kDraws) / kBins;
  double chi2 = 0.0;
  for (int c : counts) chi2 += (c - expected) * (c - expected) / expected;
  EXPECT_LT(chi2, 43.82);
}

TEST(Rng, BelowPassesChiSquare) {
  constexpr int kDraws = 70000;
  RngStream rng(11, 3);
  std::array<int, 7> counts{};
  for (int i = 0; i < kDraws; ++i) ++counts[rng.below(7)];
  const double expected = kDraws / 7.0;
  double chi2 = 0.0;
  for (int c : counts) chi2 += (c - expected) * (c - expected) / expected;
  EXPECT_LT(chi2, 22.46);
}

TEST(Rng, NormalMoments) {
  RngStream rng(3, 4);
  double s = 0.0, ss = 0.0;
  constexpr int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    ASSERT_TRUE(std::isfinite(z));
    s += z;
    ss += z * z;
  }
  EXPECT_NEAR(s / n, 0.0, 0.01);
  EXPECT_NEAR(ss / n, 1.0, 0.015);
}

TEST(Stats, WelfordMatchesTwoPass) {
  RngStream rng(7, 0);
  RunningStats rs(3);
  std::vector<std::array<double, 3>> xs;
  for (int i = 0; i < 1000; ++i) {
    std::array<double, 3> x{3.0 + 2.0 * rng.normal(), -1.0 + rng.normal(), 1e3 + 0.1 * rng.normal()};
    xs.push_back(x);
    rs.update(x);
  }
  for (std::size_t j = 0; j < 3; ++j) {
    double mean = 0.0;
    for (const auto& x : xs) mean += x[j];
    mean /= xs.size();
    double var = 0.0;
    for (const auto& x : xs) var += (x[j] - mean) * (x[j] - mean);
    var /= xs.size();
    EXPECT_NEAR(rs.mean()[j], mean, 1e-9 * std::abs(mean) + 1e-12);
    EXPECT_NEAR(rs.variance(j), var, 1e-9 * var);
  }
}

TEST(Stats, MergeEqualsSequentialUpdates) {
  RngStream rng(9, 0);
  RunningStats all(2), left(2), right(2);
  for (int i = 0; i < 300; ++i) {
    const std::array<double, 2> x{rng.normal(), 5.0 * rng.uniform()};
    all.update(x);
    (i < 120 ? left : right).update(x);
  }
  left.merge(right);
  EXPECT_EQ(left.count(), all.count());
  for (std::size_t j = 0; j < 2; ++j) {
    EXPECT_NEAR(left.mean()[j], all.mean()[j], 1e-12);
    EXPECT_NEAR(left.variance(j), all.variance(j), 1e-12);
  }
}

TEST(Stats, MergeIntoEmptyCopies) {
  RunningStats empty, other(2);
  const std::array<double, 2> x{1.0, 2.0}, y{3.0, 6.0};
  other.update(x);
  other.update(y);
  empty.merge(other);
  EXPECT_EQ(empty.count(), 2u);
  EXPECT_EQ(empty.mean(), other.mean());
}

TEST(Stats, NormalizeIsIdentityBelowTwoSamples) {
  RunningStats rs(2);
  const std::array<double, 2> x{4.0, -2.0};
  EXPECT_EQ(rs.normalize(x), std::vector<double>(x.begin(), x.end()));
  rs.update(x);
  EXPECT_EQ(rs.normalize(x), std::vector<double>(x.begin(), x.end()));
}

TEST(Stats, NormalizeStandardizes) {
  RunningStats rs(1);
  for (double v : {1.0, 3.0}) rs.update(std::array<double, 1>{v});
  // mean 2, population std 1
  EXPECT_DOUBLE_EQ(rs.normalize(std::array<double, 1>{4.0})[0], 2.0);
}

TEST(Stats, ConstantCoordinateUsesFloor) {
  RunningStats rs(1);
  for (int i = 0; i < 5; ++i) rs.update(std::array<double, 1>{5.0});
  EXPECT_EQ(rs.normalize(std::array<double, 1>{5.0})[0], 0.0);
  EXPECT_NEAR(rs.normalize(std::array<double, 1>{5.0 + 1e-8})[0], 1.0, 1e-6);
}

TEST(Stats, DimensionMismatchThrows) {
  RunningStats rs(2);
  EXPECT_THROW(rs.update(std::array<double, 3>{1, 2, 3}), DimensionError);
}

TEST(Stats, StdOfFloorsAtConstantData) {
  EXPECT_EQ(std_of(std::vector<double>{5.0, 5.0, 5.0}), 1e-8);
  EXPECT_DOUBLE_EQ(std_of(std::vector<double>{1.0, 3.0}), 1.0);
  EXPECT_THROW(std_of(std::vector<double>{}), DimensionError);
}

TEST(Matrix, ShapeChecks) {
  EXPECT_THROW(Matrix(0, 3), DimensionError);
  EXPECT_THROW(Matrix(2, 2, std::vector<double>{1, 2, 3}), DimensionError);
  Matrix a(2, 3), b(3, 2);
  EXPECT_THROW(a.add_scaled(b, 1.0), DimensionError);
  EXPECT_THROW(matvec(a, std::vector<double>{1, 2}), DimensionError);
}

TEST(Matrix, MatvecAndAddScaled) {
  Matrix m(2, 3, std::vector<double>{1, 2, 3, 4, 5, 6});
  EXPECT_EQ(matvec(m, std::vector<double>{1, 0, -1}), (std::vector<double>{-2, -2}));
  Matrix n = Matrix::identity(2);
  n.add_scaled(Matrix(2, 2, 1.0), 0.5);
  EXPECT_EQ(n(0, 0), 1.5);
  EXPECT_EQ(n(0, 1), 0.5);
}
