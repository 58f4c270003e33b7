#include <gtest/gtest.h>

#include <cmath>

#include "pacoh/bounds.hpp"
#include "pacoh/environments.hpp"
#include "test_support.hpp"

using namespace pacoh;

namespace {

BoundTerms terms_for(int n, int m, double delta = 0.1) {
  BoundTerms t{};
  t.n = n;
  t.m = m;
  t.lambda = n;
  t.beta = m;
  t.delta = delta;
  t.complexity = complexity_bounded(n, m, t.lambda, t.beta, delta);
  return t;
}

LogZSample random_sample(int priors, int n, std::uint64_t seed) {
  RngStream rng(seed, 0);
  LogZSample s;
  s.log_z = -5.0 + 2.0 * pacoh::testing::random_matrix(priors, n, rng).array();
  for (int j = 0; j < priors; ++j) s.priors.push_back(rng.normal_vector(2));
  return s;
}

// Expected test error of the Gibbs posterior by quadrature on a 1-d grid.
double gibbs_error_by_grid(double mu, double s, const TaskDataset& task, double w_star, double beta,
                           const Mat& test_x) {
  const int steps = 40000;
  const double lo = mu - 12.0 * s - 20.0, hi = mu + 12.0 * s + 20.0, h = (hi - lo) / steps;
  Vec log_w(steps + 1), err(steps + 1);
  for (int g = 0; g <= steps; ++g) {
    const double w = lo + g * h;
    const Vec wv = Vec::Constant(1, w);
    log_w[g] = -0.5 * (w - mu) * (w - mu) / (s * s) - beta * logistic_loss(wv, task.inputs, task.targets);
    double e = 0.0;
    for (Eigen::Index j = 0; j < test_x.rows(); ++j) {
      const double p = 1.0 / (1.0 + std::exp(-w_star * test_x(j, 0)));
      e += w * test_x(j, 0) > 0.0 ? 1.0 - p : p;
    }
    err[g] = e / static_cast<double>(test_x.rows());
  }
  return softmax(log_w).dot(err);
}

}  // namespace

TEST(Complexity, BoundedLossHandValue) {
  EXPECT_NEAR(complexity_bounded(10, 20, 10.0, 20.0, 0.1), 0.9781413400211801, 1e-14);
  EXPECT_NEAR(complexity_bounded(10, 20, 10.0, 20.0, 0.1, -1.0, 1.0) - complexity_bounded(10, 20, 10.0, 20.0, 0.1),
              0.75, 1e-14);
  EXPECT_THROW(complexity_bounded(10, 20, 10.0, 20.0, 0.0), InvalidRange);
  EXPECT_THROW(complexity_bounded(10, 20, 10.0, 20.0, 0.1, 1.0, 0.0), InvalidRange);
}

TEST(Complexity, DecreasesAsConfidenceLoosens) {
  double prev = INFINITY;
  for (double delta : {0.001, 0.01, 0.05, 0.1, 0.5, 1.0}) {
    const double c = complexity_subgamma(20, 30, 4.0, 5.0, delta, 1.0, 0.5, 2.0, 0.3);
    EXPECT_LT(c, prev);
    prev = c;
  }
}

TEST(Complexity, SubGammaWindow) {
  EXPECT_THROW(complexity_subgamma(10, 10, 3.0, 20.0, 0.1, 1.0, 0.5, 1.0, 0.1), OutOfValidityWindow);
  EXPECT_THROW(complexity_subgamma(10, 10, 50.0, 2.0, 0.1, 1.0, 0.1, 1.0, 0.5), OutOfValidityWindow);
  // Zero c reduces to the sub-Gaussian form.
  EXPECT_NEAR(complexity_subgamma(4, 9, 2.0, 3.0, 1.0, 1.5, 0.0, 0.5, 0.0), 3.0 * 1.5 / 18.0 + 2.0 * 0.5 / 8.0,
              1e-15);
}

TEST(BlrLogZ, MatchesOneDimensionalQuadrature) {
  RngStream rng(1, 0);
  for (int trial = 0; trial < 5; ++trial) {
    const Mat x = pacoh::testing::random_matrix(6, 1, rng);
    const Vec y = rng.normal_vector(6);
    const double mu = rng.normal(), pv = 0.3 + rng.uniform(), lv = 0.2 + rng.uniform(), beta = 1.0 + 5.0 * rng.uniform();
    const int steps = 200000;
    const double lo = mu - 12.0 * std::sqrt(pv), hi = mu + 12.0 * std::sqrt(pv), h = (hi - lo) / steps;
    Vec logs(steps + 1);
    for (int g = 0; g <= steps; ++g) {
      const double w = lo + g * h;
      double loss = 0.0;
      for (int j = 0; j < 6; ++j)
        loss += 0.5 * std::log(2.0 * M_PI * lv) + (y[j] - w * x(j, 0)) * (y[j] - w * x(j, 0)) / (2.0 * lv);
      logs[g] = -0.5 * (w - mu) * (w - mu) / pv - 0.5 * std::log(2.0 * M_PI * pv) - beta / 6.0 * loss + std::log(h);
    }
    EXPECT_NEAR(blr_log_z(Vec::Constant(1, mu), pv, x, y, beta, lv), logsumexp(logs), 1e-6);
  }
}

TEST(BlrLogZ, GradientMatchesFiniteDifferences) {
  RngStream rng(2, 0);
  const Mat x = pacoh::testing::random_matrix(7, 3, rng);
  const Vec y = rng.normal_vector(7);
  const Vec mu = rng.normal_vector(3);
  const auto r = blr_log_z_with_grad(mu, 0.5, x, y, 3.0, 0.4);
  const Vec fd = pacoh::testing::central_diff([&](const Vec& p) { return blr_log_z(p, 0.5, x, y, 3.0, 0.4); }, mu);
  EXPECT_LT(pacoh::testing::rel_error(r.grad, fd), 1e-7);
  EXPECT_DOUBLE_EQ(blr_log_z(mu, 0.5, Mat(0, 3), Vec(0), 3.0, 0.4), 0.0);
}

TEST(BlrGibbsPosterior, MatchesConjugateFormula) {
  RngStream rng(3, 0);
  const Mat x = pacoh::testing::random_matrix(8, 2, rng);
  const Vec y = rng.normal_vector(8);
  const Vec mu = rng.normal_vector(2);
  const double pv = 0.7, lv = 0.3, beta = 4.0;
  const double tau = beta / 8.0;
  const Mat prec = Mat::Identity(2, 2) / pv + tau / lv * x.transpose() * x;
  const Mat cov = prec.inverse();
  const Vec mean = cov * (mu / pv + tau / lv * x.transpose() * y);
  const auto q = blr_gibbs_posterior(mu, pv, x, y, beta, lv);
  EXPECT_LT((q.mean - mean).norm(), 1e-12);
  EXPECT_LT((q.cov - cov).norm(), 1e-12);
}

TEST(BlrExpectedLoss, MatchesMonteCarlo) {
  RngStream rng(4, 0);
  GaussianPosterior q{Vec::Constant(2, 0.1), 0.05 * Mat::Identity(2, 2)};
  const Vec w_star = Vec::Constant(2, 0.3);
  const double lv = 0.5, sx2 = 1.5, seps2 = 0.2;
  Vec losses(200000);
  for (Eigen::Index k = 0; k < losses.size(); ++k) {
    const Vec w = q.mean + std::sqrt(0.05) * rng.normal_vector(2);
    const Vec xx = std::sqrt(sx2) * rng.normal_vector(2);
    const double yy = xx.dot(w_star) + std::sqrt(seps2) * rng.normal();
    losses[k] = 0.5 * std::log(2.0 * M_PI * lv) + (yy - w.dot(xx)) * (yy - w.dot(xx)) / (2.0 * lv);
  }
  const double se = pacoh::testing::sample_sd(losses) / std::sqrt(200000.0);
  EXPECT_NEAR(blr_expected_loss(q, w_star, lv, sx2, seps2), losses.mean(), 4.0 * se);
}

TEST(BlrCgf, ConstantsFollowClosedForm) {
  const Vec w = Vec::Constant(2, 0.2);
  const auto k = blr_cgf_constants(w, 1.0, 1.0, 1.0, 1.0, 1.0 / 9.0, 2, 0.01);
  const double theta = 0.08 + 1.0 / 9.0;
  const double c = 2.0 * 2.0 + 0.01 * 2.0 * 2.0 * theta - theta;
  EXPECT_NEAR(k.theta, theta, 1e-15);
  EXPECT_NEAR(k.c, c, 1e-14);
  EXPECT_NEAR(k.s_sq, theta * (100.0 - c) + 100.0 * c, 1e-10);
  EXPECT_NEAR(k.psi1_term, k.s_sq / (2.0 * (100.0 - c)), 1e-12);
  EXPECT_THROW(blr_cgf_constants(w, 1.0, 1.0, 1.0, 1.0, 0.1, 2, 1.0), OutOfValidityWindow);
  EXPECT_THROW(blr_cgf2_constants(w, 1.0, 1.0, 1.0, 1.0, 2, 4), OutOfValidityWindow);
  const auto k2 = blr_cgf2_constants(w, 0.01, 1.0, 1.0, 1.0, 2, 100);
  EXPECT_NEAR(k2.c, 1.01, 1e-15);
  EXPECT_NEAR(k2.psi2_term, (1.01 * 0.08 + 2.0 * 1.01 * 1.01) / (2.0 * (10.0 - 1.01)), 1e-12);
}

TEST(PacohBound, DiracHyperPriorEqualsPerTaskBound) {
  LogZSample s = random_sample(1, 6, 5);
  for (int j = 0; j < 9; ++j) {
    s.log_z.conservativeResize(s.log_z.rows() + 1, Eigen::NoChange);
    s.log_z.row(s.log_z.rows() - 1) = s.log_z.row(0);
  }
  const auto t = terms_for(6, 10);
  EXPECT_NEAR(pacoh_bound(s, t).total, per_task_bound(s, t).total, 1e-12);
  EXPECT_DOUBLE_EQ(delta_improvement(s, t.lambda, t.beta).value, 0.0);
}

TEST(PacohBound, GapEqualsDeltaAndIsNonNegative) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const LogZSample s = random_sample(50, 5, seed);
    const auto t = terms_for(5, 8);
    const double gap = per_task_bound(s, t).total - pacoh_bound(s, t).total;
    const auto d = delta_improvement(s, t.lambda, t.beta);
    EXPECT_NEAR(gap, d.value, 1e-10);
    EXPECT_GE(d.value, 0.0);
    EXPECT_GT(d.std_error, 0.0);
  }
}

TEST(PacohBound, TermsAddUp) {
  const LogZSample s = random_sample(30, 4, 11);
  const auto t = terms_for(4, 6);
  const auto r = pacoh_bound(s, t);
  EXPECT_NEAR(r.empirical_term + r.kl_term + r.complexity, r.total, 1e-10);
  EXPECT_GE(r.kl_term, -1e-12);
  EXPECT_NEAR(pacoh_weights(s, t.lambda, t.beta).sum(), 1.0, 1e-12);
  EXPECT_EQ(BoundReport::csv_header().find("kind,n,m"), 0u);
}

TEST(PacohBound, MonteCarloErrorShrinksWithSamples) {
  auto log_z = [](const Vec& p, const TaskDataset& task, RngStream&) { return -p.squaredNorm() - task.id; };
  std::vector<TaskDataset> tasks(3);
  for (int i = 0; i < 3; ++i) tasks[i].id = i;
  const auto hp = DiagonalGaussian::isotropic(Vec::Zero(2), 1.0);
  const auto t = terms_for(3, 5);
  const double small = pacoh_bound(tasks, hp, t, log_z, 100, RngStream(1, 0)).mc_std_error;
  const double large = pacoh_bound(tasks, hp, t, log_z, 10000, RngStream(1, 0)).mc_std_error;
  EXPECT_NEAR(small / large, 10.0, 2.0);
}

TEST(PacohBound, CoupledSamplesShareDraws) {
  auto log_z = [](const Vec& p, const TaskDataset&, RngStream& r) { return -p.squaredNorm() + 0.1 * r.normal(); };
  std::vector<TaskDataset> tasks(2);
  tasks[1].id = 1;
  const auto hp = DiagonalGaussian::isotropic(Vec::Zero(2), 1.0);
  const auto a = sample_log_z(tasks, hp, log_z, 20, RngStream(3, 0));
  const auto b = sample_log_z(tasks, hp, log_z, 20, RngStream(3, 0));
  EXPECT_EQ(a.log_z, b.log_z);
  EXPECT_THROW(sample_log_z(tasks, hp, log_z, 0, RngStream()), InvalidRange);
}

TEST(ClassifierLoss, HandValues) {
  Mat x(2, 1);
  x << 1.0, -2.0;
  Vec y(2);
  y << 1.0, 1.0;
  const Vec w = Vec::Constant(1, 1.0);
  EXPECT_DOUBLE_EQ(zero_one_loss(w, x, y), 0.5);
  EXPECT_NEAR(logistic_loss(w, x, y), 0.5 * (std::log1p(std::exp(-1.0)) + std::log1p(std::exp(2.0))), 1e-15);
  Vec y1(1);
  y1 << 0.0;
  EXPECT_NEAR(logistic_loss(w, Mat::Constant(1, 1, -2.0), y1), 0.1269280110429726, 1e-15);
}

TEST(ClassifierLogZ, LimitingCases) {
  RngStream rng(6, 0);
  const Vec w_star = Vec::Constant(2, 1.0);
  const TaskDataset task = sample_logreg_task(LogregEnvConfig{}, w_star, 10, 0, rng);
  const Vec mu = rng.normal_vector(2);
  EXPECT_DOUBLE_EQ(classifier_log_z(mu, 1.0, task, 0.0, ClassifierLoss::logistic, 10, rng), 0.0);
  EXPECT_NEAR(classifier_log_z(mu, 1e-12, task, 3.0, ClassifierLoss::logistic, 10, rng),
              -3.0 * logistic_loss(mu, task.inputs, task.targets), 1e-9);
  EXPECT_LE(classifier_log_z(mu, 1.0, task, 3.0, ClassifierLoss::zero_one, 200, rng), 0.0);
}

TEST(GibbsMisclassification, MatchesGridOracleInOneDimension) {
  struct Case {
    double mu, s, w_star, beta;
  };
  // The last case puts the posterior deep in the prior's tail.
  for (const Case c : {Case{0.5, 2.0, 3.0, 10.0}, Case{-1.0, 1.0, 4.0, 30.0}, Case{-6.0, 0.5, 8.0, 200.0}}) {
    RngStream rng(7, 0);
    LogregEnvConfig env;
    env.d = 1;
    const TaskDataset task = sample_logreg_task(env, Vec::Constant(1, c.w_star), 20, 0, rng);
    const Mat test_x = sample_logreg_inputs(100, 1, rng);
    const double est = gibbs_misclassification(Vec::Constant(1, c.mu), c.s, task, Vec::Constant(1, c.w_star),
                                               c.beta, 20000, test_x, rng);
    EXPECT_NEAR(est, gibbs_error_by_grid(c.mu, c.s, task, c.w_star, c.beta, test_x), 0.01) << "mu " << c.mu;
  }
}

TEST(TransferError, RejectsMismatchedWeights) {
  EXPECT_THROW(misclassification_transfer_error({Vec::Zero(2)}, Vec::Ones(2), 1.0, LogregEnvConfig{}, 8, 8.0, 2, 10,
                                                100, RngStream()),
               LengthMismatch);
}
