#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "pacoh/numerics.hpp"
#include "test_support.hpp"

using namespace pacoh;
using pacoh::testing::random_spd;

TEST(Cholesky, IdentityCase) {
  Vec b(2);
  b << 1.0, 2.0;
  const auto r = cholesky_logdet_solve(Mat::Identity(2, 2), b);
  EXPECT_NEAR(r.solution(0, 0), 1.0, 1e-12);
  EXPECT_NEAR(r.solution(1, 0), 2.0, 1e-12);
  EXPECT_NEAR(r.log_det, 0.0, 1e-12);
}

TEST(Cholesky, ScalarCase) {
  Mat a(1, 1);
  a << 4.0;
  Mat b(1, 1);
  b << 2.0;
  const auto r = cholesky_logdet_solve(a, b);
  EXPECT_NEAR(r.solution(0, 0), 0.5, 1e-12);
  EXPECT_NEAR(r.log_det, 1.386294361119891, 1e-12);
}

TEST(Cholesky, MatchesExplicitInverseAndDeterminant) {
  RngStream rng(7, 1);
  for (int trial = 0; trial < 10; ++trial) {
    const Mat a = random_spd(3, rng);
    const Mat b = pacoh::testing::random_matrix(3, 2, rng);
    const auto r = cholesky_logdet_solve(a, b);
    const Mat expected = a.inverse() * b;
    EXPECT_LT((r.solution - expected).norm() / expected.norm(), 1e-8);
    EXPECT_NEAR(r.log_det, std::log(a.determinant()), 1e-8);
    EXPECT_LT((a * r.solution - b).norm() / b.norm(), 1e-8);
    // exp(logdet) * det(A^-1) = 1
    EXPECT_NEAR(std::exp(r.log_det) * a.inverse().determinant(), 1.0, 1e-6);
  }
}

TEST(Cholesky, JitterRescuesSingularMatrix) {
  Mat a = Mat::Ones(3, 3);  // rank one, PSD
  const SpdFactor f(a);
  EXPECT_GT(f.jitter(), 0.0);
}

TEST(Cholesky, IndefiniteMatrixRaises) {
  Mat a = -Mat::Identity(2, 2);
  EXPECT_THROW(SpdFactor{a}, NotPositiveDefinite);
}

TEST(LogSumExp, KnownValues) {
  EXPECT_NEAR(logsumexp(Vec::Zero(2)), std::log(2.0), 1e-15);
  Vec v(2);
  v << -1000.0, -1000.0;
  EXPECT_NEAR(logsumexp(v), -1000.0 + std::log(2.0), 1e-10);
  Vec w(3);
  w << 1.0, 2.0, 3.0;
  EXPECT_NEAR(logsumexp(w), 3.4076059644443803, 1e-14);
}

TEST(LogSumExp, NegativeInfinityEntries) {
  Vec v(2);
  v << -INFINITY, 0.0;
  EXPECT_DOUBLE_EQ(logsumexp(v), 0.0);
}

TEST(LogSumExp, EmptyRaises) { EXPECT_THROW(logsumexp(Vec()), EmptyInput); }

TEST(LogSumExp, ShiftInvariance) {
  RngStream rng(3, 0);
  for (int t = 0; t < 20; ++t) {
    const Vec v = 10.0 * rng.normal_vector(6);
    const double c = rng.uniform(-500.0, 500.0);
    EXPECT_NEAR(logsumexp((v.array() + c).matrix()), logsumexp(v) + c, 1e-9 * (1.0 + std::abs(c)));
  }
}

TEST(Softmax, SumsToOne) {
  RngStream rng(4, 0);
  const Vec w = softmax(50.0 * rng.normal_vector(20));
  EXPECT_NEAR(w.sum(), 1.0, 1e-12);
  EXPECT_GE(w.minCoeff(), 0.0);
}

TEST(GaussianLogpdf, KnownValues) {
  EXPECT_NEAR(gaussian_logpdf(Vec::Zero(1), DiagonalGaussian::isotropic(Vec::Zero(1), 1.0)), -0.9189385332046727,
              1e-12);
  EXPECT_NEAR(gaussian_logpdf(Vec::Zero(2), DiagonalGaussian::isotropic(Vec::Zero(2), 1.0)), -1.8378770664093453,
              1e-12);
  EXPECT_NEAR(gaussian_logpdf(Vec::Ones(1), DiagonalGaussian::isotropic(Vec::Zero(1), 2.0)), -1.7370857137646181,
              1e-12);
}

TEST(GaussianLogpdf, DimensionMismatchRaises) {
  EXPECT_THROW(gaussian_logpdf(Vec::Zero(3), DiagonalGaussian::isotropic(Vec::Zero(2), 1.0)), DimensionMismatch);
}

TEST(GaussianLogpdf, IntegratesToOne) {
  const DiagonalGaussian g(Vec::Constant(1, 0.7), Vec::Constant(1, std::log(1.3)));
  const double h = 1e-3;
  double total = 0.0;
  for (double x = -15.0; x <= 15.0; x += h) total += std::exp(gaussian_logpdf(Vec::Constant(1, x), g)) * h;
  EXPECT_NEAR(total, 1.0, 1e-4);
}

TEST(GaussianLogpdf, GradientMatchesFiniteDifferences) {
  RngStream rng(5, 0);
  const DiagonalGaussian g(rng.normal_vector(4), 0.3 * rng.normal_vector(4));
  const Vec x = rng.normal_vector(4);
  const Vec fd = pacoh::testing::central_diff([&](const Vec& z) { return gaussian_logpdf(z, g); }, x);
  EXPECT_LT(pacoh::testing::rel_error(gaussian_logpdf_grad(x, g), fd), 1e-7);
}

TEST(NormalCdf, Symmetry) {
  EXPECT_DOUBLE_EQ(normal_cdf(0.0), 0.5);
  EXPECT_NEAR(normal_cdf(1.0) + normal_cdf(-1.0), 1.0, 1e-15);
  EXPECT_NEAR(normal_cdf(1.959963984540054), 0.975, 1e-12);
}

TEST(RngStream, ForkIsDeterministic) {
  const RngStream s(42, 0);
  RngStream a = rng_fork(s, 0);
  RngStream b = rng_fork(s, 0);
  for (int i = 0; i < 5; ++i) EXPECT_EQ(a.uniform(), b.uniform());
}

TEST(RngStream, ForksAreSeparated) {
  const RngStream s(42, 0);
  EXPECT_NE(rng_fork(s, 0).uniform(), rng_fork(s, 1).uniform());
  EXPECT_NE(RngStream(1, 0).uniform(), RngStream(2, 0).uniform());
}

TEST(RngStream, ForkLeavesParentUnaffected) {
  RngStream a(9, 3);
  RngStream b(9, 3);
  (void)a.fork(5).uniform();
  EXPECT_EQ(a.uniform(), b.uniform());
}

TEST(RngStream, SerializeRestoreContinuesSequence) {
  RngStream a(11, 2);
  for (int i = 0; i < 7; ++i) a.normal();
  RngStream b = RngStream::restore(a.serialize());
  for (int i = 0; i < 10; ++i) EXPECT_EQ(a.next_u64(), b.next_u64());
  EXPECT_THROW(RngStream::restore("garbage"), InvalidRange);
}

TEST(RngStream, UniformInOpenInterval) {
  RngStream r(0, 0);
  for (int i = 0; i < 10000; ++i) {
    const double u = r.uniform();
    ASSERT_GT(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
}

TEST(RngStream, NormalMoments) {
  RngStream r(1, 0);
  const Vec v = r.normal_vector(200000);
  EXPECT_NEAR(v.mean(), 0.0, 3.0 * 1.0 / std::sqrt(200000.0) * 1.5);
  EXPECT_NEAR(pacoh::testing::sample_sd(v), 1.0, 0.01);
  // Fourth moment of a standard normal is 3.
  EXPECT_NEAR(v.array().pow(4).mean(), 3.0, 0.1);
}

TEST(RngStream, IndexCoversRange) {
  RngStream r(2, 0);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 1000; ++i) {
    const auto k = r.index(7);
    ASSERT_LT(k, 7u);
    seen.insert(k);
  }
  EXPECT_EQ(seen.size(), 7u);
  EXPECT_THROW(r.index(0), InvalidRange);
}
