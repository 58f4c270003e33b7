#include <gtest/gtest.h>

#include <cmath>

#include "pacoh/bo.hpp"
#include "pacoh/evaluation.hpp"
#include "test_support.hpp"

using namespace pacoh;

namespace {

// Linear net on a scalar feature: particle (w, b) predicts w x + b.
BnnModel linear_model() {
  BnnModel m;
  m.arch = {1, {}, 1};
  return m;
}

Mat particles(std::initializer_list<std::pair<double, double>> wb) {
  Mat p(static_cast<Eigen::Index>(wb.size()), 3);
  Eigen::Index k = 0;
  for (auto [w, b] : wb) p.row(k++) << w, b, 0.0;
  return p;
}

Mat two_arms() {
  Mat pool(2, 1);
  pool << 0.0, 1.0;
  return pool;
}

}  // namespace

TEST(Ucb, SingleParticleIsArgmax) {
  Mat pool(3, 1);
  pool << -1.0, 2.0, 0.5;
  EXPECT_EQ(ucb_select(linear_model(), {particles({{1.0, 0.0}})}, pool), 1);
  EXPECT_EQ(ucb_select(linear_model(), {particles({{-1.0, 0.0}})}, pool), 0);
}

TEST(Ucb, SpreadWinsOverEqualMean) {
  // Particles predict (0, 0) and (0, 2): arm 1 has mean 1 and std 1.
  EXPECT_EQ(ucb_select(linear_model(), {particles({{0.0, 0.0}, {2.0, 0.0}})}, two_arms(), 2.0), 1);
}

TEST(Ucb, TiesGoToLowestIndex) {
  Mat pool(4, 1);
  pool << 0.3, -2.0, 1.0, 5.0;
  EXPECT_EQ(ucb_select(linear_model(), {particles({{0.0, 1.0}, {0.0, 3.0}})}, pool), 0);
  EXPECT_THROW(ucb_select(linear_model(), {particles({{0.0, 1.0}})}, Mat(0, 1)), EmptyPool);
}

TEST(Ucb, ParticleOutputsStackAllSets) {
  const Mat out = particle_outputs(linear_model(), {particles({{1.0, 0.0}}), particles({{2.0, 1.0}, {0.0, 0.5}})},
                                   two_arms());
  ASSERT_EQ(out.rows(), 3);
  EXPECT_DOUBLE_EQ(out(1, 1), 3.0);
  EXPECT_DOUBLE_EQ(out(2, 0), 0.5);
}

TEST(Ts, SingleParticleIsDeterministic) {
  RngStream rng(1, 0);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(ts_select(linear_model(), {particles({{-1.0, 0.0}})}, two_arms(), rng), 0);
}

TEST(Ts, SelectionFrequenciesMatchParticleArgmax) {
  // Argmax per particle: arm 1, arm 0, arm 1 -> P(arm 1) = 2/3.
  const std::vector<Mat> sets{particles({{1.0, 0.0}, {-1.0, 0.0}}), particles({{0.5, 0.0}})};
  RngStream rng(2, 0);
  const int draws = 10000;
  int ones = 0;
  for (int i = 0; i < draws; ++i) ones += ts_select(linear_model(), sets, two_arms(), rng);
  const double p = 2.0 / 3.0;
  EXPECT_NEAR(ones / static_cast<double>(draws), p, 3.0 * std::sqrt(p * (1.0 - p) / draws));
  RngStream a(3, 0), b(3, 0);
  EXPECT_EQ(ts_select(linear_model(), sets, two_arms(), a), ts_select(linear_model(), sets, two_arms(), b));
}

namespace {

BanditPool toy_pool(bool flat) {
  BanditPool pool;
  pool.candidates = Vec::LinSpaced(8, -1.0, 1.0);
  Vec r(8);
  for (int a = 0; a < 8; ++a) r[a] = flat ? 0.5 : -std::pow(pool.candidates(a, 0) - 0.4, 2);
  pool.task_rewards = {r};
  Eigen::Index best;
  r.maxCoeff(&best);
  pool.optimum = {static_cast<int>(best)};
  return pool;
}

BoConfig small_bo(int rounds, Acquisition acq) {
  BoConfig cfg;
  cfg.rounds = rounds;
  cfg.acquisition = acq;
  cfg.target.steps = 20;
  cfg.target.num_particles = 3;
  cfg.warm_steps = 5;
  return cfg;
}

}  // namespace

TEST(RunBo, SingleRoundIsOneRandomAction) {
  BnnModel m;
  m.arch = {1, {4}, 1};
  const auto h = run_bo(m, toy_pool(false), 0, {m.prior_center(-1.0)}, small_bo(1, Acquisition::ucb), RngStream(4, 0));
  ASSERT_EQ(h.actions.size(), 1u);
  EXPECT_GE(h.actions[0], 0);
  EXPECT_LT(h.actions[0], 8);
  EXPECT_EQ(h.posterior_hashes[0], 0u);
}

TEST(RunBo, FlatPoolHasZeroRegret) {
  BnnModel m;
  m.arch = {1, {4}, 1};
  const auto h = run_bo(m, toy_pool(true), 0, {m.prior_center(-1.0)}, small_bo(4, Acquisition::ts), RngStream(5, 0));
  const Vec rewards = Eigen::Map<const Vec>(h.rewards.data(), static_cast<Eigen::Index>(h.rewards.size()));
  const auto c = regret_curves(rewards, 0.5);
  EXPECT_EQ(c.average, Vec::Zero(4));
  EXPECT_EQ(c.simple, Vec::Zero(4));
}

TEST(RunBo, DeterministicAndValid) {
  BnnModel m;
  m.arch = {1, {4}, 1};
  for (Acquisition acq : {Acquisition::ucb, Acquisition::ts}) {
    const auto a = run_bo(m, toy_pool(false), 0, {m.prior_center(-1.0)}, small_bo(5, acq), RngStream(6, 0));
    const auto b = run_bo(m, toy_pool(false), 0, {m.prior_center(-1.0)}, small_bo(5, acq), RngStream(6, 0));
    EXPECT_EQ(a.actions, b.actions);
    EXPECT_EQ(a.posterior_hashes, b.posterior_hashes);
    for (int act : a.actions) {
      EXPECT_GE(act, 0);
      EXPECT_LT(act, 8);
    }
    for (size_t t = 1; t < a.posterior_hashes.size(); ++t) EXPECT_NE(a.posterior_hashes[t], 0u);
  }
}

TEST(Acquisition, NamesRoundTrip) {
  EXPECT_EQ(acquisition_from_string(to_string(Acquisition::ts)), Acquisition::ts);
  EXPECT_EQ(acquisition_from_string(to_string(Acquisition::ucb)), Acquisition::ucb);
  EXPECT_THROW(acquisition_from_string("ei"), ConfigError);
}
