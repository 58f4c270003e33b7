#include <gtest/gtest.h>

#include <cmath>

#include "pacoh/gp_prior.hpp"
#include "test_support.hpp"

using namespace pacoh;

namespace {

GpModel small_model(int input_dim = 2, double noise = 0.05) { return GpModel::make(input_dim, {6, 5}, 2, noise); }

Vec random_phi(const GpModel& m, RngStream& rng, double scale = 0.5) { return scale * rng.normal_vector(m.dim()); }

// Dense reference: features, kernel, mean from the MLP module only.
Mat dense_kernel(const GpModel& m, const Vec& phi, const Mat& a, const Mat& b) {
  const Mat fa = mlp_forward_batch(m.feature_arch, m.feature_params(phi), a);
  const Mat fb = mlp_forward_batch(m.feature_arch, m.feature_params(phi), b);
  Mat k(a.rows(), b.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < b.rows(); ++j) k(i, j) = 0.5 * std::exp(-(fa.row(i) - fb.row(j)).squaredNorm());
  return k;
}

Vec dense_mean(const GpModel& m, const Vec& phi, const Mat& x) {
  return mlp_forward_batch(m.mean_arch, m.mean_params(phi), x).col(0);
}

}  // namespace

TEST(GpKernel, SelfSimilarityIsHalf) {
  const GpModel m = small_model();
  RngStream rng(1, 0);
  const Vec phi = random_phi(m, rng);
  const Vec x = rng.normal_vector(2);
  EXPECT_DOUBLE_EQ(gp_kernel(m, phi, x, x), 0.5);
}

TEST(GpKernel, ZeroFeatureMapIsConstant) {
  const GpModel m = small_model();
  RngStream rng(2, 0);
  Vec phi = random_phi(m, rng);
  phi.tail(m.feature_arch.param_count()).setZero();
  EXPECT_DOUBLE_EQ(gp_kernel(m, phi, rng.normal_vector(2), rng.normal_vector(2)), 0.5);
}

TEST(GpKernel, MatchesDirectFormula) {
  const GpModel m = small_model();
  RngStream rng(3, 0);
  const Vec phi = random_phi(m, rng, 1.0);
  const Vec x = rng.normal_vector(2), z = rng.normal_vector(2);
  const Vec fx = mlp_forward(m.feature_arch, m.feature_params(phi), x);
  const Vec fz = mlp_forward(m.feature_arch, m.feature_params(phi), z);
  double d2 = 0.0;
  for (int i = 0; i < 2; ++i) d2 += (fx[i] - fz[i]) * (fx[i] - fz[i]);
  EXPECT_NEAR(gp_kernel(m, phi, x, z), 0.5 * std::exp(-d2), 1e-15);
  EXPECT_DOUBLE_EQ(gp_kernel(m, phi, x, z), gp_kernel(m, phi, z, x));
}

TEST(GpKernel, MatrixIsSymmetricPsd) {
  const GpModel m = small_model();
  for (std::uint64_t s = 0; s < 10; ++s) {
    RngStream rng(s, 4);
    const Vec phi = random_phi(m, rng, 1.0);
    const Mat k = gp_kernel_matrix(m, phi, pacoh::testing::random_matrix(8, 2, rng));
    EXPECT_LT((k - k.transpose()).norm(), 1e-13);
    Eigen::SelfAdjointEigenSolver<Mat> es(k);
    EXPECT_GE(es.eigenvalues().minCoeff(), -1e-9);
  }
}

TEST(GpMll, UnitKernelZeroResidual) {
  const GpModel m = GpModel::make(1, {4}, 2, 0.5);
  const Vec phi = Vec::Zero(m.dim());
  const Mat x = Mat::Constant(1, 1, 0.3);
  EXPECT_NEAR(gp_mll(m, phi, x, Vec::Zero(1)), -0.9189385332046727, 1e-12);
  EXPECT_NEAR(gp_mll(m, phi, x, Vec::Ones(1)), -1.4189385332046727, 1e-12);
}

TEST(GpMll, MatchesDenseFormula) {
  const GpModel m = small_model();
  for (std::uint64_t s = 0; s < 10; ++s) {
    RngStream rng(s, 5);
    const Vec phi = random_phi(m, rng, 1.0);
    const Mat x = pacoh::testing::random_matrix(3, 2, rng);
    const Vec y = rng.normal_vector(3);
    Mat kt = dense_kernel(m, phi, x, x) + m.noise_variance * Mat::Identity(3, 3);
    const Vec r = y - dense_mean(m, phi, x);
    const double expected =
        -0.5 * r.dot(kt.inverse() * r) - 0.5 * std::log(kt.determinant()) - 1.5 * std::log(2.0 * M_PI);
    EXPECT_NEAR(gp_mll(m, phi, x, y), expected, 1e-8);
  }
}

TEST(GpMll, PermutationInvariant) {
  const GpModel m = small_model();
  RngStream rng(6, 0);
  const Vec phi = random_phi(m, rng);
  const Mat x = pacoh::testing::random_matrix(5, 2, rng);
  const Vec y = rng.normal_vector(5);
  Eigen::PermutationMatrix<Eigen::Dynamic> perm(5);
  perm.indices() << 3, 1, 4, 0, 2;
  const Mat xp = perm * x;
  const Vec yp = perm * y;
  EXPECT_NEAR(gp_mll(m, phi, x, y), gp_mll(m, phi, xp, yp), 1e-12);
  EXPECT_LT((gp_mll_grad(m, phi, x, y) - gp_mll_grad(m, phi, xp, yp)).norm(), 1e-10);
}

TEST(GpMllGrad, ValueAgreesWithMll) {
  const GpModel m = small_model();
  RngStream rng(7, 0);
  const Vec phi = random_phi(m, rng);
  const Mat x = pacoh::testing::random_matrix(4, 2, rng);
  const Vec y = rng.normal_vector(4);
  EXPECT_NEAR(gp_mll_with_grad(m, phi, x, y).value, gp_mll(m, phi, x, y), 1e-12);
}

TEST(GpMllGrad, StationaryResidualGivesZeroMeanGradient) {
  const GpModel m = small_model();
  RngStream rng(8, 0);
  Vec phi = random_phi(m, rng);
  const Mat x = pacoh::testing::random_matrix(4, 2, rng);
  const Vec y = dense_mean(m, phi, x);
  // Frozen kernel: the feature net output layer is zero.
  const auto& fa = m.feature_arch;
  const int off = m.mean_arch.param_count() + fa.weight_offset(fa.num_layers() - 1);
  phi.segment(off, fa.param_count() - fa.weight_offset(fa.num_layers() - 1)).setZero();
  const Vec g = gp_mll_grad(m, phi, x, y);
  EXPECT_LT(g.head(m.mean_arch.param_count()).norm(), 1e-12);
}

TEST(GpMllGrad, MatchesFiniteDifferencesOnGrid) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const GpModel m = small_model(1 + static_cast<int>(s % 2));
    RngStream rng(s, 9);
    const Vec phi = random_phi(m, rng);
    const Mat x = pacoh::testing::random_matrix(4, m.mean_arch.input_dim, rng);
    const Vec y = rng.normal_vector(4);
    const Vec fd = pacoh::testing::central_diff([&](const Vec& p) { return gp_mll(m, p, x, y); }, phi);
    EXPECT_LT(pacoh::testing::rel_error(gp_mll_grad(m, phi, x, y), fd), 1e-4) << "seed " << s;
  }
}

TEST(GpPredict, EmptyContextIsPriorPredictive) {
  const GpModel m = small_model(2, 0.1);
  RngStream rng(10, 0);
  const Vec phi = random_phi(m, rng);
  const Mat xq = pacoh::testing::random_matrix(3, 2, rng);
  const auto pred = gp_posterior_predict(m, phi, Mat(0, 2), Vec(0), xq);
  const Vec mean = dense_mean(m, phi, xq);
  for (int i = 0; i < 3; ++i) {
    EXPECT_NEAR(pred[i].mean, mean[i], 1e-14);
    EXPECT_NEAR(pred[i].variance, 0.6, 1e-14);
  }
}

TEST(GpPredict, NoiselessInterpolation) {
  const GpModel m = small_model(2, 1e-12);
  RngStream rng(11, 0);
  const Vec phi = random_phi(m, rng, 1.0);
  const Mat x = pacoh::testing::random_matrix(3, 2, rng);
  const Vec y = rng.normal_vector(3);
  const auto pred = gp_posterior_predict(m, phi, x, y, x.topRows(1));
  EXPECT_NEAR(pred[0].mean, y[0], 1e-4);
}

TEST(GpPredict, MatchesDenseConditional) {
  const GpModel m = small_model();
  for (std::uint64_t s = 0; s < 5; ++s) {
    RngStream rng(s, 12);
    const Vec phi = random_phi(m, rng, 1.0);
    const Mat x = pacoh::testing::random_matrix(2, 2, rng);
    const Vec y = rng.normal_vector(2);
    const Mat xq = pacoh::testing::random_matrix(3, 2, rng);
    const Mat kinv = (dense_kernel(m, phi, x, x) + m.noise_variance * Mat::Identity(2, 2)).inverse();
    const Mat kq = dense_kernel(m, phi, xq, x);
    const Vec mu = dense_mean(m, phi, xq) + kq * kinv * (y - dense_mean(m, phi, x));
    const auto pred = gp_posterior_predict(m, phi, x, y, xq);
    for (int i = 0; i < 3; ++i) {
      const double var = 0.5 - kq.row(i).dot(kinv * kq.row(i).transpose()) + m.noise_variance;
      EXPECT_NEAR(pred[i].mean, mu[i], 1e-8);
      EXPECT_NEAR(pred[i].variance, var, 1e-8);
    }
  }
}

TEST(GpPredict, DuplicatePointNeverIncreasesVariance) {
  const GpModel m = small_model();
  for (std::uint64_t s = 0; s < 10; ++s) {
    RngStream rng(s, 13);
    const Vec phi = random_phi(m, rng, 1.0);
    const Mat x = pacoh::testing::random_matrix(3, 2, rng);
    const Vec y = rng.normal_vector(3);
    Mat x2(4, 2);
    x2 << x, x.row(1);
    Vec y2(4);
    y2 << y, y[1];
    const Mat xq = pacoh::testing::random_matrix(4, 2, rng);
    const auto a = gp_posterior_predict(m, phi, x, y, xq);
    const auto b = gp_posterior_predict(m, phi, x2, y2, xq);
    for (int i = 0; i < 4; ++i) EXPECT_LE(b[i].variance, a[i].variance + 1e-12);
  }
}

TEST(GpModel, RejectsBadShapes) {
  EXPECT_THROW(GpModel::make(1, {4}, 2, 0.0), InvalidRange);
  const GpModel m = small_model();
  EXPECT_THROW(gp_mll(m, Vec::Zero(3), Mat::Zero(1, 2), Vec::Zero(1)), DimensionMismatch);
}
