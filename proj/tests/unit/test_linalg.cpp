#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "emlp/error.hpp"
#include "emlp/matrix.hpp"
#include "emlp/rng.hpp"
#include "support/oracles.hpp"

using namespace emlp;

namespace {

void expect_close(const DenseMatrix& a, const DenseMatrix& b, double rel) {
  ASSERT_EQ(a.rows(), b.rows());
  ASSERT_EQ(a.cols(), b.cols());
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double x = a.values()[i], y = b.values()[i];
    EXPECT_LE(std::abs(x - y), rel * std::max({1.0, std::abs(x), std::abs(y)})) << "entry " << i;
  }
}

}  // namespace

TEST(Matmul, HandExample) {
  const auto a = DenseMatrix::from_rows({{1, 2}, {3, 4}});
  const auto b = DenseMatrix::from_rows({{5}, {6}});
  EXPECT_EQ(matmul(a, b), DenseMatrix::from_rows({{17}, {39}}));
}

TEST(Matmul, IdentityLeftAndRight) {
  std::mt19937_64 gen(5);
  for (int t = 0; t < 10; ++t) {
    const auto m = oracle::random_matrix(gen, 3, 1 + t);
    EXPECT_EQ(matmul(DenseMatrix::identity(3), m), m);
    EXPECT_EQ(matmul(m, DenseMatrix::identity(m.cols())), m);
  }
}

TEST(Matmul, MatchesNaiveOracleOnRandomPairs) {
  std::mt19937_64 gen(42);
  std::uniform_int_distribution<std::size_t> dim(1, 16);
  for (int t = 0; t < 100; ++t) {
    const std::size_t m = dim(gen), k = dim(gen), n = dim(gen);
    const auto a = oracle::random_matrix(gen, m, k);
    const auto b = oracle::random_matrix(gen, k, n);
    expect_close(matmul(a, b), oracle::naive_matmul(a, b), 1e-12);
  }
}

TEST(Matmul, LargeBlockedProductMatchesOracle) {
  std::mt19937_64 gen(7);
  const auto a = oracle::random_matrix(gen, 9, 300);
  const auto b = oracle::random_matrix(gen, 300, 11);
  expect_close(matmul(a, b), oracle::naive_matmul(a, b), 1e-12);
}

TEST(Matmul, ShapeMismatchThrows) {
  EXPECT_THROW(matmul(DenseMatrix(2, 3), DenseMatrix(2, 3)), ShapeError);
}

TEST(Matrix, ConstructorRejectsWrongLength) {
  EXPECT_THROW(DenseMatrix(2, 2, std::vector<double>{1, 2, 3}), ShapeError);
}

TEST(Transpose, Examples) {
  EXPECT_EQ(transpose(DenseMatrix::from_rows({{7}})), DenseMatrix::from_rows({{7}}));
  EXPECT_EQ(transpose(DenseMatrix::from_rows({{1, 2, 3}})), DenseMatrix::from_rows({{1}, {2}, {3}}));
  std::mt19937_64 gen(1);
  const auto m = oracle::random_matrix(gen, 4, 6);
  EXPECT_EQ(transpose(transpose(m)), m);
  const auto big = oracle::random_matrix(gen, 70, 45);
  const auto t = transpose(big);
  for (std::size_t i = 0; i < big.rows(); ++i)
    for (std::size_t j = 0; j < big.cols(); ++j) ASSERT_EQ(t(j, i), big(i, j));
}

TEST(Elementwise, MapExamples) {
  const auto a = DenseMatrix::from_rows({{1, -1}});
  EXPECT_EQ(map_elementwise(a, [](double x) { return x; }), a);
  EXPECT_EQ(map_elementwise(a, [](double) { return 0.0; }), DenseMatrix(1, 2));
  EXPECT_EQ(map_elementwise(a, [](double x) { return 2 * x; }), DenseMatrix::from_rows({{2, -2}}));
}

TEST(Elementwise, ZipExamples) {
  const auto a = DenseMatrix::from_rows({{1, 2}});
  const auto mul = [](double x, double y) { return x * y; };
  EXPECT_EQ(zip_elementwise(a, DenseMatrix(1, 2, 1.0), mul), a);
  EXPECT_EQ(zip_elementwise(a, DenseMatrix(1, 2, 0.0), mul), DenseMatrix(1, 2));
  EXPECT_EQ(zip_elementwise(a, DenseMatrix::from_rows({{3, 4}}), [](double x, double y) { return x + y; }),
            DenseMatrix::from_rows({{4, 6}}));
  EXPECT_THROW(zip_elementwise(a, DenseMatrix(2, 1), mul), ShapeError);
}

TEST(Reduce, Examples) {
  EXPECT_EQ(reduce_axis(DenseMatrix::from_rows({{1, 3}, {5, 7}}), Axis::Rows, Reduction::Mean),
            (std::vector<double>{3, 5}));
  EXPECT_EQ(reduce_axis(DenseMatrix::from_rows({{1, 2}, {3, 4}}), Axis::Cols, Reduction::Sum),
            (std::vector<double>{3, 7}));
  EXPECT_EQ(reduce_axis(DenseMatrix::from_rows({{0.2, 0.5, 0.5}}), Axis::Cols, Reduction::Argmax),
            (std::vector<double>{1}));
  EXPECT_EQ(reduce_axis(DenseMatrix::from_rows({{1, 9}, {4, 2}}), Axis::Rows, Reduction::Max),
            (std::vector<double>{4, 9}));
  EXPECT_THROW(reduce_axis(DenseMatrix(0, 3), Axis::Rows, Reduction::Sum), DataError);
}

TEST(Argmax, LowestIndexOnTies) {
  const std::vector<double> v{0.2, 0.5, 0.5};
  EXPECT_EQ(argmax(v), 1u);
  const std::vector<double> flat(5, 3.0);
  EXPECT_EQ(argmax(flat), 0u);
  const auto m = DenseMatrix::from_rows({{1, 1}, {0, 2}, {4, 4}});
  EXPECT_EQ(argmax_rows(m), (std::vector<std::size_t>{0, 1, 0}));
}

TEST(Rows, GatherAndBias) {
  const auto m = DenseMatrix::from_rows({{1, 2}, {3, 4}, {5, 6}});
  const std::vector<std::size_t> idx{2, 0, 2};
  EXPECT_EQ(gather_rows(m, idx), DenseMatrix::from_rows({{5, 6}, {1, 2}, {5, 6}}));
  auto b = m;
  const std::vector<double> bias{10, 20};
  add_row_vector(b, bias);
  EXPECT_EQ(b, DenseMatrix::from_rows({{11, 22}, {13, 24}, {15, 26}}));
  const std::vector<std::size_t> bad{3};
  EXPECT_THROW(gather_rows(m, bad), ShapeError);
}

TEST(Rng, SameSeedSameStream) {
  RngState a(123), b(123), c(124);
  bool differs = false;
  for (int i = 0; i < 1000; ++i) {
    const auto x = a.next_u64();
    EXPECT_EQ(x, b.next_u64());
    differs |= x != c.next_u64();
  }
  EXPECT_TRUE(differs);
}

TEST(Rng, StreamIsPinned) {
  // std::mt19937_64 is fully specified: its 10000th output for the default
  // seed is fixed by the C++ standard.
  RngState rng(std::mt19937_64::default_seed);
  for (int i = 0; i < 9999; ++i) rng.next_u64();
  EXPECT_EQ(rng.next_u64(), 9981545732273789042ull);
}

TEST(Rng, UniformMeanAndRange) {
  RngState rng(9);
  const auto m = sample_uniform(rng, 1000, 100, 0.0, 1.0);
  double s = 0.0;
  for (double v : m.values()) {
    ASSERT_GE(v, 0.0);
    ASSERT_LT(v, 1.0);
    s += v;
  }
  const double mean = s / static_cast<double>(m.size());
  EXPECT_GE(mean, 0.495);
  EXPECT_LE(mean, 0.505);

  RngState r1(3), r2(3);
  EXPECT_EQ(sample_uniform(r1, 5, 5, -2, 2), sample_uniform(r2, 5, 5, -2, 2));

  const double hi = 1.0;
  const double lo = hi - 1e-12;
  RngState r3(4);
  const auto narrow = sample_uniform(r3, 100, 10, lo, hi);
  for (double v : narrow.values()) {
    ASSERT_GE(v, lo);
    ASSERT_LT(v, hi);
  }
  EXPECT_THROW(sample_uniform(r3, 1, 1, 1.0, 1.0), ParameterError);
}

TEST(Rng, NextBelowAndPermutation) {
  RngState rng(11);
  std::vector<int> hist(7, 0);
  for (int i = 0; i < 70000; ++i) ++hist[rng.next_below(7)];
  for (int h : hist) EXPECT_NEAR(h, 10000, 500);
  EXPECT_THROW(rng.next_below(0), ParameterError);

  RngState p1(5), p2(5);
  auto perm = random_permutation(50, p1);
  EXPECT_EQ(perm, random_permutation(50, p2));
  std::sort(perm.begin(), perm.end());
  for (std::size_t i = 0; i < perm.size(); ++i) EXPECT_EQ(perm[i], i);
}
