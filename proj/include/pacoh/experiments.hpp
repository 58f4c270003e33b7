#pragma once

#include <string>
#include <vector>

#include "pacoh/bo.hpp"
#include "pacoh/bounds.hpp"
#include "pacoh/checkpoint.hpp"
#include "pacoh/environments.hpp"
#include "pacoh/evaluation.hpp"
#include "pacoh/pacoh_meta.hpp"

namespace pacoh {

// ---- bound sweeps ----

struct BlrBoundSweepConfig {
  BlrEnvConfig env;
  int m = 5;
  std::vector<int> ns{4, 16, 64, 256};
  double hyper_prior_var = 0.25;
  double prior_var = 0.04;
  double likelihood_var = 1.0;
  double delta = 0.1;
  int mc_priors = 2000;
  int test_tasks = 500;
};

struct LogregBoundSweepConfig {
  LogregEnvConfig env;
  int m = 5;
  std::vector<int> ns{8, 16, 32, 64, 128};
  double prior_std = 10.0;
  double hyper_prior_std = 20.0;
  double delta = 0.1;
  ClassifierLoss loss = ClassifierLoss::zero_one;
  int mc_priors = 500;
  int draws = 2000;  // prior draws per log Z estimate
  int test_tasks = 200;
  int test_points = 200;
  int posterior_draws = 2000;
};

struct BoundSweepRow {
  int n = 0;
  BoundReport pacoh;
  BoundReport per_task;
  DeltaEstimate delta{};
  TransferEstimate pacoh_test_error{};
  TransferEstimate per_task_test_error{};
};

std::string bound_sweep_csv_header();
std::string bound_sweep_csv_row(const BoundSweepRow& row);

std::vector<BoundSweepRow> blr_bound_sweep(const BlrBoundSweepConfig& cfg, std::uint64_t seed);
std::vector<BoundSweepRow> logreg_bound_sweep(const LogregBoundSweepConfig& cfg, std::uint64_t seed);

// Transfer error of the linear Gibbs posterior with priors drawn from the
// weighted set (prior_means, weights).
TransferEstimate blr_transfer_error(const std::vector<Vec>& prior_means, const Vec& weights, const BlrEnvConfig& env,
                                    int m, double beta, double prior_var, double likelihood_var, int num_tasks,
                                    RngStream rng);

// ---- meta-learning on regression / classification environments ----

struct EnvConfig {
  std::string name = "sinusoid";  // sinusoid | cauchy | logreg
  int n = 20;
  int m = 5;
  SplitConfig split;
};

MetaDataset make_env(const EnvConfig& cfg, std::uint64_t seed);

struct ModelConfig {
  std::string kind = "gp";  // gp | bnn
  std::vector<int> hidden{32, 32, 32, 32};
  int feature_dim = 2;
  double noise_variance = 0.05;
  double prior_log_std_center = 0.0;
  bool learn_noise = true;
};

ModelDescriptor describe_model(const ModelConfig& cfg, int input_dim, int num_classes);

struct MetaTestConfig {
  TargetTrainConfig target;
  LambdaBetaMode mode = LambdaBetaMode::linear;
  int vi_prior_samples = 10;
  CalibrationConfig calibration;
};

struct TaskMetrics {
  int task = 0;
  double rmse = 0.0;
  double calib_err = 0.0;
  double accuracy = 0.0;
  double ece = 0.0;
};

struct MetricSummary {
  std::vector<TaskMetrics> tasks;
  TaskMetrics mean;  // task = -1
};

// Priors used by the vanilla baseline: the hyper-prior center.
std::vector<Vec> vanilla_priors(const ModelDescriptor& model);

MetricSummary evaluate_priors(const ModelDescriptor& model, const std::vector<Vec>& priors,
                              const std::vector<TestTask>& tasks, const MetaTestConfig& cfg, RngStream rng);

// Meta-train tasks paired with their held-out points.
std::vector<TestTask> meta_train_eval_tasks(const MetaDataset& ds);

struct RegressionRun {
  MetricSummary test;
  MetricSummary train;
};

// Meta-trains (unless vanilla) and evaluates on the test and meta-train tasks.
RegressionRun run_meta_learning(const MetaDataset& ds, const ModelDescriptor& model, const MetaTrainConfig& meta,
                                const MetaTestConfig& test, bool vanilla);

// ---- Bayesian optimization ----

struct BoExperimentConfig {
  PeptidePoolConfig pool;
  std::uint64_t pool_seed = 0;
  ModelConfig model{"bnn", {32, 32}, 2, 0.05, 0.0, true};
  MetaTrainConfig meta;
  BoConfig bo;
  std::vector<std::string> algorithms{"pacoh-ucb", "pacoh-ts", "vanilla-ucb", "vanilla-ts"};
};

struct BoRoundRow {
  std::string algorithm;
  std::uint64_t seed;
  int task;
  int t;
  int action;
  double reward;
  double avg_regret;
  double simple_regret;
};

std::string bo_csv_header();
std::string bo_csv_row(const BoRoundRow& row);

// The test task of seed s is first_test_task + s mod test_tasks.
std::vector<BoRoundRow> run_bo_experiment(const BoExperimentConfig& cfg, const PeptideEnv& env,
                                          const ModelDescriptor& model, const HyperPosteriorApprox* approx,
                                          const std::vector<std::uint64_t>& seeds);

}  // namespace pacoh
