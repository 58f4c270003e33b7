#pragma once

#include <string>
#include <vector>

#include "pacoh/data.hpp"

namespace pacoh {

// Sizes of the held-out sets attached to a generated environment.
struct SplitConfig {
  int test_tasks = 20;
  int query_points = 100;
  int train_query_points = 100;
};

struct SinusoidParams {
  double amplitude = 1.0;
  double phase = 0.0;
  double offset = 5.0;
  double slope = 0.5;
};

double sinusoid_value(const SinusoidParams& p, double x);
SinusoidParams sample_sinusoid_params(RngStream& rng);

MetaDataset gen_sinusoid_env(int n, int m, std::uint64_t seed, const SplitConfig& split = {});

double cauchy_mean(const Vec& x);

struct CauchyEnvConfig {
  double gp_variance = 1.0;
  double gp_lengthscale = 0.2;  // k = var * exp(-|x - x'|^2 / (2 l))
  double noise_std = 0.05;
};

MetaDataset gen_cauchy_env(int n, int m, std::uint64_t seed, const SplitConfig& split = {},
                           const CauchyEnvConfig& cfg = {});

struct BlrEnvConfig {
  int d = 5;
  double task_mean = 0.2;  // mu_T = task_mean * 1
  double task_std = 0.1;
  double input_std = 1.0;
  double noise_std = 1.0 / 3.0;
};

Vec sample_blr_weights(const BlrEnvConfig& cfg, RngStream& rng);
TaskDataset sample_blr_task(const BlrEnvConfig& cfg, const Vec& w_star, int m, int id, RngStream& rng);
MetaDataset gen_blr_env(int n, int m, std::uint64_t seed, const BlrEnvConfig& cfg = {}, const SplitConfig& split = {});

struct LogregEnvConfig {
  int d = 2;
  double task_mean = 10.0;
  double task_std = 3.0;
};

Vec sample_logreg_weights(const LogregEnvConfig& cfg, RngStream& rng);
Mat sample_logreg_inputs(int m, int d, RngStream& rng);
TaskDataset sample_logreg_task(const LogregEnvConfig& cfg, const Vec& w_star, int m, int id, RngStream& rng);
MetaDataset gen_logreg_env(int n, int m, std::uint64_t seed, const LogregEnvConfig& cfg = {},
                           const SplitConfig& split = {});

struct BanditPool {
  Mat candidates;                  // pool_size x feature_dim
  std::vector<Vec> task_rewards;   // noiseless reward of every arm, per task
  std::vector<int> optimum;        // argmax of task_rewards[t]
};

struct PeptidePoolConfig {
  int pool_size = 813;
  int feature_dim = 45;
  int latent_dim = 6;
  int meta_train_tasks = 5;
  int points_per_task = 200;
  int test_tasks = 5;
  double task_spread = 0.25;
  double reward_noise = 0.05;
};

// Pool tasks 0..meta_train_tasks-1 back the meta-training sets; the
// remaining test_tasks are reserved for BO runs.
struct PeptideEnv {
  BanditPool pool;
  std::vector<TaskDataset> meta_train;
  int first_test_task = 0;
};

PeptideEnv gen_peptide_pool(std::uint64_t seed, const PeptidePoolConfig& cfg = {});

// JSON layout with a schema version and row-major matrices.
std::string to_json(const MetaDataset& ds);
MetaDataset meta_dataset_from_json(const std::string& text);
std::string to_json(const BanditPool& pool);
BanditPool bandit_pool_from_json(const std::string& text);

}  // namespace pacoh
