#include <gtest/gtest.h>

#include "kflow/numkit.hpp"
#include "oracles.hpp"

using namespace kflow;

TEST(LuLogAbsDet, Identity) {
  const auto d = num::lu_logabsdet(Matrix::Identity(3, 3));
  EXPECT_DOUBLE_EQ(d.log_abs, 0.0);
  EXPECT_EQ(d.sign, 1);
}

TEST(LuLogAbsDet, DiagonalUnitDeterminant) {
  Matrix m = Matrix::Zero(2, 2);
  m(0, 0) = 2.0;
  m(1, 1) = 0.5;
  const auto d = num::lu_logabsdet(m);
  EXPECT_NEAR(d.log_abs, 0.0, 1e-15);
  EXPECT_EQ(d.sign, 1);
}

TEST(LuLogAbsDet, MatchesCofactorExpansion) {
  Prng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix m = oracle::random_matrix(rng, 4, 4);
    const double det = oracle::cofactor_det(m);
    const auto d = num::lu_logabsdet(m);
    EXPECT_EQ(d.sign, det > 0 ? 1 : -1);
    EXPECT_NEAR(std::exp(d.log_abs), std::abs(det), 1e-10 * std::abs(det));
  }
}

TEST(LuLogAbsDet, SingularAndNonSquare) {
  Matrix m(2, 2);
  m << 1, 2, 2, 4;
  EXPECT_EQ(num::lu_logabsdet(m).sign, 0);
  EXPECT_THROW(num::lu_logabsdet(Matrix::Zero(2, 3)), DimensionError);
}

TEST(Solve, TrivialCases) {
  Vector v(3);
  v << 1, -2, 3;
  EXPECT_EQ(num::solve(Matrix::Identity(3, 3), v), v);
  Matrix d = Matrix::Zero(2, 2);
  d(0, 0) = 2;
  d(1, 1) = 4;
  Vector rhs(2);
  rhs << 2, 4;
  const Vector x = num::solve(d, rhs);
  EXPECT_DOUBLE_EQ(x(0), 1.0);
  EXPECT_DOUBLE_EQ(x(1), 1.0);
}

TEST(Solve, SpdAgainstGaussElimination) {
  Prng rng(12);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix b = oracle::random_matrix(rng, 5, 5);
    const Matrix m = b * b.transpose() + 0.5 * Matrix::Identity(5, 5);
    const Vector rhs = oracle::random_vector(rng, 5);
    const Vector x = num::solve(m, rhs);
    EXPECT_LT((x - oracle::gauss_solve(m, rhs)).norm(), 1e-10 * std::max(1.0, x.norm()));
    EXPECT_LT((m * x - rhs).norm(), 1e-9 * rhs.norm());
  }
}

TEST(Solve, RecoversVector) {
  Prng rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix m = oracle::random_matrix(rng, 6, 6) + 3.0 * Matrix::Identity(6, 6);
    const Vector v = oracle::random_vector(rng, 6);
    EXPECT_LT((num::solve(m, Vector(m * v)) - v).norm(), 1e-8 * v.norm());
  }
}

TEST(Solve, SingularRaisesWithConditionEstimate) {
  Matrix m(2, 2);
  m << 1, 2, 2, 4;
  try {
    num::solve(m, Vector(Vector::Ones(2)));
    FAIL() << "expected SingularMatrixError";
  } catch (const SingularMatrixError& e) {
    EXPECT_GT(e.condition_estimate(), 1e12);
  }
}

TEST(EigSym, Examples) {
  Matrix d = Matrix::Zero(2, 2);
  d(0, 0) = 3;
  d(1, 1) = 1;
  auto e = num::eig_sym(d);
  EXPECT_DOUBLE_EQ(e.values(0), 3.0);
  EXPECT_DOUBLE_EQ(e.values(1), 1.0);
  EXPECT_NEAR(std::abs(e.vectors(0, 0)), 1.0, 1e-15);
  EXPECT_NEAR(std::abs(e.vectors(1, 1)), 1.0, 1e-15);

  Matrix m(2, 2);
  m << 2, 1, 1, 2;
  e = num::eig_sym(m);
  EXPECT_NEAR(e.values(0), 3.0, 1e-14);
  EXPECT_NEAR(e.values(1), 1.0, 1e-14);
}

TEST(EigSym, RandomReconstructionAndTrace) {
  Prng rng(14);
  for (int trial = 0; trial < 10; ++trial) {
    Matrix m = oracle::random_matrix(rng, 6, 6);
    m = (0.5 * (m + m.transpose())).eval();
    const auto e = num::eig_sym(m);
    const Matrix rec = e.vectors * e.values.asDiagonal() * e.vectors.transpose();
    EXPECT_LT((rec - m).cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_LT((e.vectors.transpose() * e.vectors - Matrix::Identity(6, 6)).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_NEAR(e.values.sum(), m.trace(), 1e-10 * std::max(1.0, std::abs(m.trace())));
    for (int i = 1; i < 6; ++i) EXPECT_GE(e.values(i - 1), e.values(i));
  }
}

TEST(EigSym, RejectsAsymmetric) {
  Matrix m(2, 2);
  m << 1, 2, 0, 1;
  EXPECT_THROW(num::eig_sym(m), NumericError);
}

TEST(SqrtSpd, Examples) {
  EXPECT_LT((num::sqrt_spd(Matrix::Identity(3, 3)) - Matrix::Identity(3, 3)).norm(), 1e-14);
  Matrix d = Matrix::Zero(2, 2);
  d(0, 0) = 4;
  d(1, 1) = 9;
  const Matrix r = num::sqrt_spd(d);
  EXPECT_NEAR(r(0, 0), 2.0, 1e-14);
  EXPECT_NEAR(r(1, 1), 3.0, 1e-14);
  EXPECT_NEAR(r(0, 1), 0.0, 1e-14);
}

TEST(SqrtSpd, RandomSquaresBack) {
  Prng rng(15);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix b = oracle::random_matrix(rng, 5, 5);
    const Matrix m = b * b.transpose() + 0.1 * Matrix::Identity(5, 5);
    const Matrix r = num::sqrt_spd(m);
    EXPECT_LT((r * r - m).cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_EQ(r, r.transpose());
    EXPECT_GE(num::eig_sym(r).values.minCoeff(), -1e-12);
  }
}

TEST(SqrtSpd, ProjectorIsFixedPoint) {
  Prng rng(16);
  const Matrix q = Eigen::HouseholderQR<Matrix>(oracle::random_matrix(rng, 4, 4)).householderQ();
  const Matrix p = q.leftCols(2) * q.leftCols(2).transpose();
  EXPECT_LT((num::sqrt_spd(p) - p).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(SqrtSpd, RejectsIndefinite) {
  Matrix m = Matrix::Identity(2, 2);
  m(1, 1) = -1e-3;
  EXPECT_THROW(num::sqrt_spd(m), NumericError);
  m(1, 1) = -1e-11;
  EXPECT_NO_THROW(num::sqrt_spd(m));
}

TEST(Pinv, Examples) {
  EXPECT_LT((num::pinv(Matrix::Identity(3, 3)) - Matrix::Identity(3, 3)).norm(), 1e-14);
  Matrix col(2, 1);
  col << 2, 0;
  const Matrix p = num::pinv(col);
  ASSERT_EQ(p.rows(), 1);
  ASSERT_EQ(p.cols(), 2);
  EXPECT_NEAR(p(0, 0), 0.5, 1e-15);
  EXPECT_NEAR(p(0, 1), 0.0, 1e-15);
}

TEST(Pinv, PenroseIdentities) {
  Prng rng(17);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix m = oracle::random_matrix(rng, 5, 3);
    const Matrix x = num::pinv(m);
    EXPECT_LT((m * x * m - m).cwiseAbs().maxCoeff(), 1e-7);
    EXPECT_LT((x * m * x - x).cwiseAbs().maxCoeff(), 1e-7);
    EXPECT_LT(((m * x).transpose() - m * x).cwiseAbs().maxCoeff(), 1e-7);
    EXPECT_LT(((x * m).transpose() - x * m).cwiseAbs().maxCoeff(), 1e-7);
  }
}

TEST(Prng, Determinism) {
  Prng a(42), b(42);
  EXPECT_EQ(sample_std_normal(a, 50), sample_std_normal(b, 50));
}

TEST(Prng, DistinctSeedsDiffer) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    Prng a(s), b(s + 1);
    bool differ = false;
    for (int i = 0; i < 16; ++i) differ |= a.next_u64() != b.next_u64();
    EXPECT_TRUE(differ);
  }
}

TEST(Prng, NormalMoments) {
  Prng rng(3);
  const Vector v = sample_std_normal(rng, 100000);
  const double mean = v.mean();
  const double var = (v.array() - mean).square().sum() / (v.size() - 1);
  EXPECT_LT(std::abs(mean), 0.02);
  EXPECT_LT(std::abs(var - 1.0), 0.03);
  EXPECT_LT(std::abs(mean), 3.0 / std::sqrt(1e5));
}

TEST(Prng, UniformRangeAndIndex) {
  Prng rng(4);
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 70000; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    ++counts[rng.uniform_index(7)];
  }
  for (int c : counts) EXPECT_NEAR(c, 10000, 400);
}
