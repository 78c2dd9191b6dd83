#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "kflow/generators.hpp"
#include "oracles.hpp"

using namespace kflow;

namespace {

Generator random_mlp(Prng& rng, const std::vector<int>& widths) {
  Generator g = Generator::mlp(widths, 0.2, rng);
  Vector theta = g.params();
  for (Eigen::Index i = 0; i < theta.size(); ++i) theta(i) = 2.0 * rng.uniform() - 1.0;
  g.set_params(theta);
  return g;
}

double min_abs_preactivation(const Generator& g, const Vector& z) {
  const auto& mlp = std::get<MlpGenerator>(g.net());
  Vector h = z;
  double m = 1e300;
  for (std::size_t l = 0; l + 1 < mlp.weights.size(); ++l) {
    Vector pre = mlp.weights[l] * h + mlp.biases[l];
    m = std::min(m, pre.cwiseAbs().minCoeff());
    h = pre.unaryExpr([&](double v) { return v >= 0 ? v : mlp.slope * v; });
  }
  return m;
}

Vector kink_free_latent(Prng& rng, const Generator& g, double margin = 1e-2) {
  Vector z;
  do {
    z = oracle::random_vector(rng, g.in_dim(), 1.5);
  } while (min_abs_preactivation(g, z) < margin);
  return z;
}

Matrix well_conditioned(Prng& rng, int n) {
  return oracle::random_matrix(rng, n, n) + 2.0 * Matrix::Identity(n, n);
}

// Push-forward log density at x by Newton inversion of G started from z0.
double pushforward_logpdf(const Generator& g, const Vector& x, Vector z) {
  for (int it = 0; it < 50; ++it) {
    const Vector r = g.forward(z) - x;
    if (r.norm() < 1e-14) break;
    z -= g.jacobian(z).lu().solve(r);
  }
  const double log_prior = -0.5 * z.squaredNorm() - 0.5 * z.size() * std::log(2.0 * M_PI);
  return log_prior - std::log(std::abs(g.jacobian(z).determinant()));
}

}  // namespace

TEST(GenForward, Examples) {
  Generator id(LinearGenerator{Matrix::Identity(2, 2), Vector::Zero(2)});
  Vector z(2);
  z << 0.3, -1.2;
  EXPECT_EQ(id.forward(z), z);

  Generator two(LinearGenerator{2.0 * Matrix::Identity(2, 2), Vector::Ones(2)});
  Vector e(2);
  e << 1, 0;
  Vector expected(2);
  expected << 3, 1;
  EXPECT_EQ(two.forward(e), expected);

  MlpGenerator zero;
  zero.weights = {Matrix::Zero(4, 2), Matrix::Zero(3, 4)};
  Vector beta(3);
  beta << 0.5, -1.0, 2.0;
  zero.biases = {Vector::Zero(4), beta};
  Generator g(zero);
  EXPECT_EQ(g.forward(z), beta);
  EXPECT_THROW(g.forward(Vector(Vector::Zero(3))), DimensionError);
}

TEST(GenForward, BatchMatchesRows) {
  Prng rng(40);
  const Generator g = random_mlp(rng, {2, 8, 5, 3});
  const PointMatrix z = sample_std_normal(rng, 7, 2);
  const PointMatrix x = g.forward(z);
  for (int i = 0; i < 7; ++i) EXPECT_LT((x.row(i).transpose() - g.forward(Vector(z.row(i).transpose()))).norm(), 1e-14);
}

TEST(GenJacobian, LinearIsConstant) {
  Prng rng(41);
  const Generator g = Generator::linear(3, 4, rng);
  const Matrix a = std::get<LinearGenerator>(g.net()).weight;
  for (int i = 0; i < 10; ++i) EXPECT_EQ(g.jacobian(oracle::random_vector(rng, 3, 5.0)), a);
}

TEST(GenJacobian, ActiveRegionIsWeight) {
  MlpGenerator m;
  m.weights = {Matrix::Identity(2, 2) * 0.5, Matrix::Identity(2, 2)};
  m.weights[0](0, 1) = 0.25;
  m.biases = {Vector::Constant(2, 10.0), Vector::Zero(2)};
  Generator g(m);
  EXPECT_EQ(g.jacobian(Vector::Zero(2)), m.weights[0]);
}

TEST(GenJacobian, MatchesFd) {
  Prng rng(42);
  for (int trial = 0; trial < 20; ++trial) {
    const Generator g = random_mlp(rng, {3, 16, 8, 4});
    const Vector z = kink_free_latent(rng, g);
    const Matrix fd = oracle::central_jacobian([&](const Vector& p) { return g.forward(p); }, z, 1e-6);
    const Matrix j = g.jacobian(z);
    EXPECT_LE((j - fd).norm(), 1e-5 * std::max(1.0, j.norm()));
  }
}

TEST(GeneratorScoreSquare, LinearExamples) {
  Generator id(LinearGenerator{Matrix::Identity(2, 2), Vector::Zero(2)});
  Vector z(2);
  z << 0.4, -0.7;
  EXPECT_LT((generator_score_square(id, z) + z).norm(), 1e-15);
  Generator two(LinearGenerator{2.0 * Matrix::Identity(2, 2), Vector::Zero(2)});
  EXPECT_LT((generator_score_square(two, z) + z / 2.0).norm(), 1e-15);
}

TEST(GeneratorScoreSquare, LinearEqualsPushforwardGaussianScore) {
  Prng rng(43);
  for (int n : {2, 16}) {
    for (int trial = 0; trial < 25; ++trial) {
      const Matrix a = well_conditioned(rng, n);
      const Vector b = oracle::random_vector(rng, n, 3.0);
      const Generator g(LinearGenerator{a, b});
      const Gaussian push(b, a * a.transpose());
      const Vector z = sample_std_normal(rng, static_cast<std::size_t>(n));
      const Vector s = generator_score_square(g, z);
      EXPECT_LE((s - push.score(g.forward(z))).norm(), 1e-10 * std::max(1.0, s.norm()));
    }
  }
}

TEST(GeneratorScoreSquare, MlpMatchesNumericInversion) {
  Prng rng(44);
  int checked = 0;
  while (checked < 10) {
    const Generator g = random_mlp(rng, {2, 2, 2});
    const Vector z = kink_free_latent(rng, g, 5e-2);
    if (std::abs(g.jacobian(z).determinant()) < 1e-2) continue;
    const Vector x = g.forward(z);
    const Vector fd =
        oracle::central_grad([&](const Vector& p) { return pushforward_logpdf(g, p, z); }, x, 1e-6);
    const Vector s = generator_score_square(g, z);
    EXPECT_LE(oracle::rel_err(s, fd), 1e-4);
    ++checked;
  }
}

TEST(GeneratorScoreSquare, PositiveRegionReducesToComposedLinearMap) {
  Prng rng(45);
  MlpGenerator m;
  m.weights = {well_conditioned(rng, 2), well_conditioned(rng, 2)};
  m.biases = {Vector::Constant(2, 50.0), oracle::random_vector(rng, 2)};
  const Generator g(m);
  const Matrix a = m.weights[1] * m.weights[0];
  const Vector b = m.weights[1] * m.biases[0] + m.biases[1];
  const Gaussian push(b, a * a.transpose());
  for (int i = 0; i < 10; ++i) {
    const Vector z = oracle::random_vector(rng, 2);
    EXPECT_LT((generator_score_square(g, z) - push.score(g.forward(z))).norm(), 1e-9);
  }
}

TEST(GeneratorScoreSquare, SingularJacobianThrows) {
  Matrix a(2, 2);
  a << 1, 2, 2, 4;
  const Generator g(LinearGenerator{a, Vector::Zero(2)});
  EXPECT_THROW(generator_score_square(g, Vector::Ones(2)), SingularMatrixError);
}

TEST(GeneratorScoreRect, OrthonormalEmbedding) {
  Prng rng(46);
  const Matrix q = Eigen::HouseholderQR<Matrix>(oracle::random_matrix(rng, 3, 3)).householderQ();
  const Matrix a = q.leftCols(2);
  const Generator g(LinearGenerator{a, Vector::Zero(3)});
  const Vector z = oracle::random_vector(rng, 2);
  EXPECT_LT((generator_score_rect(g, z) + a * z).norm(), 1e-12);
}

TEST(GeneratorScoreRect, SquareConsistency) {
  Prng rng(47);
  for (int trial = 0; trial < 10; ++trial) {
    const Generator lin(LinearGenerator{well_conditioned(rng, 3), oracle::random_vector(rng, 3)});
    const Vector z = oracle::random_vector(rng, 3);
    EXPECT_LT((generator_score_rect(lin, z) - generator_score_square(lin, z)).norm(), 1e-8);
    const Generator mlp = random_mlp(rng, {2, 2, 2});
    const Vector zm = kink_free_latent(rng, mlp, 5e-2);
    if (std::abs(mlp.jacobian(zm).determinant()) < 1e-2) continue;
    EXPECT_LT((generator_score_rect(mlp, zm) - generator_score_square(mlp, zm)).norm(),
              1e-8 * std::max(1.0, generator_score_square(mlp, zm).norm()));
  }
}

TEST(GeneratorScoreRect, TallLinearPenroseForm) {
  Prng rng(48);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix a = oracle::random_matrix(rng, 5, 2);
    const Generator g(LinearGenerator{a, oracle::random_vector(rng, 5)});
    const Vector z = oracle::random_vector(rng, 2);
    const Vector direct = -a * (a.transpose() * a).inverse() * z;
    EXPECT_LT((generator_score_rect(g, z) - direct).norm(), 1e-10 * std::max(1.0, direct.norm()));
  }
}

TEST(GeneratorScoreRect, RankDeficientThrows) {
  Matrix a = Matrix::Zero(3, 2);
  a(0, 0) = 1;
  a(1, 0) = 1;
  const Generator g(LinearGenerator{a, Vector::Zero(3)});
  EXPECT_THROW(generator_score_rect(g, Vector::Ones(2)), NumericError);
}

TEST(LogdetGradFd, LinearIsZero) {
  Prng rng(49);
  const Generator g(LinearGenerator{well_conditioned(rng, 3), Vector::Zero(3)});
  EXPECT_EQ(logdet_grad_fd(g, oracle::random_vector(rng, 3)), Vector::Zero(3));
}

TEST(LogdetGradFd, SecondOrderOnSmoothField) {
  auto jac = [](const Vector& z) {
    Matrix j(2, 2);
    j << 2.0 + std::sin(z(0)), z(1) * z(1), 0.5 * z(0), 3.0 + std::cos(z(1));
    return j;
  };
  Vector z(2);
  z << 0.4, -0.3;
  auto exact = [&](const Vector& p) {
    const double d = (2.0 + std::sin(p(0))) * (3.0 + std::cos(p(1))) - p(1) * p(1) * 0.5 * p(0);
    Vector g(2);
    g(0) = (std::cos(p(0)) * (3.0 + std::cos(p(1))) - 0.5 * p(1) * p(1)) / d;
    g(1) = (-(2.0 + std::sin(p(0))) * std::sin(p(1)) - p(1) * p(0)) / d;
    return g;
  };
  const Vector g = exact(z);
  const double e1 = (logdet_grad_fd(jac, z, 1e-2) - g).norm();
  const double e2 = (logdet_grad_fd(jac, z, 5e-3) - g).norm();
  EXPECT_NEAR(e1 / e2, 4.0, 0.2);
}

TEST(LogdetGradFd, MlpIsZeroInsideLinearRegion) {
  Prng rng(50);
  const Generator g = random_mlp(rng, {2, 6, 2});
  const Vector z = kink_free_latent(rng, g);
  EXPECT_LT(logdet_grad_fd(g, z).norm(), 1e-9);
}

TEST(GenVjp, LinearBilinearForm) {
  Prng rng(51);
  const Generator g = Generator::linear(3, 2, rng);
  const Vector z = oracle::random_vector(rng, 3);
  const Vector u = oracle::random_vector(rng, 2);
  const Vector grad = g.vjp(z, u);
  const Matrix ga = u * z.transpose();
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 3; ++c) EXPECT_DOUBLE_EQ(grad(r * 3 + c), ga(r, c));
  EXPECT_EQ(grad.tail(2), u);
  EXPECT_EQ(g.vjp(z, Vector::Zero(2)), Vector::Zero(g.layout().size()));
}

TEST(GenVjp, MlpMatchesParameterFd) {
  Prng rng(52);
  for (int trial = 0; trial < 10; ++trial) {
    Generator g = random_mlp(rng, {2, 8, 4, 3});
    const PointMatrix z = sample_std_normal(rng, 5, 2);
    const PointMatrix u = sample_std_normal(rng, 5, 3);
    const Vector grad = g.vjp(z, u);
    const Vector theta = g.params();
    Generator probe = g;
    const Vector fd = oracle::central_grad(
        [&](const Vector& t) {
          probe.set_params(t);
          return probe.forward(z).cwiseProduct(u).sum();
        },
        theta, 1e-6);
    EXPECT_LE(oracle::rel_err(grad, fd), 1e-5);
  }
}

TEST(GenVjp, LinearInUpstream) {
  Prng rng(53);
  const Generator g = random_mlp(rng, {2, 8, 2});
  const PointMatrix z = sample_std_normal(rng, 4, 2);
  const PointMatrix u1 = sample_std_normal(rng, 4, 2);
  const PointMatrix u2 = sample_std_normal(rng, 4, 2);
  const PointMatrix sum = u1 + u2;
  EXPECT_LE((g.vjp(z, sum) - g.vjp(z, u1) - g.vjp(z, u2)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(ParamVector, RoundTrip) {
  Prng rng(54);
  Generator g = Generator::mlp({3, 5, 2}, 0.2, rng);
  const Vector theta = oracle::random_vector(rng, g.layout().size());
  g.set_params(theta);
  EXPECT_EQ(g.params(), theta);
  EXPECT_THROW(g.set_params(Vector::Zero(3)), DimensionError);
  const ParamLayout lay = g.layout();
  ASSERT_EQ(lay.slices.size(), 4u);
  EXPECT_EQ(lay.slices[0].name, "W0");
  EXPECT_EQ(lay.size(), 3 * 5 + 5 + 5 * 2 + 2);
}

TEST(GeneratorInit, GlorotBoundsAndZeroBias) {
  Prng rng(55);
  const Generator g = Generator::mlp({2, 32, 16, 2}, 0.2, rng);
  const auto& m = std::get<MlpGenerator>(g.net());
  for (std::size_t l = 0; l < m.weights.size(); ++l) {
    const double limit = std::sqrt(6.0 / static_cast<double>(m.weights[l].rows() + m.weights[l].cols()));
    EXPECT_LE(m.weights[l].cwiseAbs().maxCoeff(), limit);
    EXPECT_EQ(m.biases[l], Vector::Zero(m.biases[l].size()));
  }
  EXPECT_THROW(Generator::mlp({2, 4, 2}, 1.5, rng), DimensionError);
}

TEST(Adam, FirstStepIsSignedLearningRate) {
  Adam adam(3);
  Vector p = Vector::Zero(3);
  Vector g(3);
  g << 0.3, -2.0, 1e-3;
  adam.step(p, g);
  EXPECT_EQ(adam.steps(), 1);
  for (int i = 0; i < 3; ++i) {
    EXPECT_LE(std::abs(p(i)), 1e-3 * std::abs(g(i)) / (std::abs(g(i)) + 1e-8) + 1e-18);
    EXPECT_NEAR(p(i), -1e-3 * (g(i) > 0 ? 1 : -1), 1e-8);
  }
}

TEST(Adam, ZeroGradientLeavesParams) {
  Adam adam(4);
  Vector p(4);
  p << 1, 2, 3, 4;
  const Vector p0 = p;
  for (int i = 0; i < 50; ++i) adam.step(p, Vector::Zero(4));
  EXPECT_EQ(p, p0);
}

TEST(Adam, QuadraticBowlDecreases) {
  Adam adam(3, AdamOptions{1e-2});
  Vector p(3);
  p << 1.0, -0.5, 2.0;
  double prev = p.squaredNorm();
  for (int i = 0; i < 100; ++i) {
    adam.step(p, Vector(2.0 * p));
    const double now = p.squaredNorm();
    EXPECT_LT(now, prev);
    prev = now;
  }
  EXPECT_THROW(adam.step(p, Vector::Zero(2)), DimensionError);
}

TEST(Checkpoint, RoundTrip) {
  Prng rng(56);
  const auto dir = std::filesystem::temp_directory_path() / "kflow_ckpt_test";
  for (const Generator& g : {Generator::linear(2, 3, rng), random_mlp(rng, {2, 7, 4, 2})}) {
    write_checkpoint(dir / "g.ckpt", g);
    const Generator back = read_checkpoint(dir / "g.ckpt");
    EXPECT_EQ(back.params(), g.params());
    EXPECT_EQ(back.is_linear(), g.is_linear());
    EXPECT_EQ(back.layout().describe(), g.layout().describe());
  }
  std::filesystem::remove_all(dir);
}
