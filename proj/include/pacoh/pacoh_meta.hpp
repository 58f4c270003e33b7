#pragma once

#include <functional>
#include <string>
#include <vector>

#include "pacoh/bnn_prior.hpp"
#include "pacoh/data.hpp"
#include "pacoh/meta_models.hpp"

namespace pacoh {

enum class Method { map, svgd, vi };
enum class OptimizerKind { adam, sgd };
// lambda_beta: lambda / (n beta_i + lambda); inverse_m_plus_one: 1 / (m_i + 1).
enum class TaskWeighting { lambda_beta, inverse_m_plus_one };
// sqrt: (lambda, beta_i) = (sqrt n, sqrt m_i); linear: (n, m_i).
enum class LambdaBetaMode { sqrt, linear };

std::string to_string(Method m);
Method method_from_string(const std::string& s);

struct HyperPosteriorApprox {
  Method method = Method::svgd;
  Mat particles;  // K x dim (MAP: K = 1)
  Vec vi_mean;
  Vec vi_log_std;

  int dim() const;
  int size() const { return static_cast<int>(particles.rows()); }
  // Priors used for prediction: the particles, or num_samples draws for VI.
  std::vector<Vec> priors(int num_samples, RngStream rng) const;
  bool operator==(const HyperPosteriorApprox&) const;
};

struct MetaTrainConfig {
  Method method = Method::svgd;
  int num_particles = 3;
  int num_mll_samples = 5;
  int task_batch = 0;   // 0 = all tasks
  int point_batch = 0;  // 0 = all points
  double step_size = 1e-3;
  int iterations = 1000;
  LambdaBetaMode mode = LambdaBetaMode::linear;
  TaskWeighting weighting = TaskWeighting::lambda_beta;
  double hyper_prior_std = 1.0;
  double bandwidth = 0.0;  // <= 0 selects the median heuristic
  double vi_tempering = 0.1;
  int vi_samples = 4;
  double vi_init_std = 0.01;
  OptimizerKind optimizer = OptimizerKind::adam;
  bool mll_only = false;
  std::uint64_t seed = 0;
};

void validate(const MetaTrainConfig& cfg, int num_tasks);

struct ScoreSettings {
  double lambda = 1.0;
  int n = 0;
  TaskWeighting weighting = TaskWeighting::lambda_beta;
  bool include_hyper_prior = true;
  int num_mll_samples = 5;
};

double task_weight(const ScoreSettings& s, double beta, Eigen::Index m);

// Unnormalized log hyper-posterior and its gradient on a batch of tasks.
// Each task draws its Monte-Carlo noise from rng.fork(task.id).
ValueGrad pacoh_log_score(const MetaModel& model, const Vec& phi, const std::vector<const TaskDataset*>& batch,
                          const std::vector<double>& betas, const DiagonalGaussian& hyper_prior,
                          const ScoreSettings& settings, const RngStream& rng);

// SE kernel exp(-|a - b|^2 / (2 ell)) between particles.
double median_bandwidth(const Mat& particles);
Mat svgd_direction(const Mat& particles, const Mat& scores, double ell);
Mat svgd_step(const Mat& particles, const Mat& scores, double ell, double eta);
Mat svgd_step(const Mat& particles, const std::function<Vec(const Vec&)>& score_fn, double bandwidth,
              double eta);

class Optimizer {
 public:
  Optimizer(OptimizerKind kind, double step_size) : kind_(kind), lr_(step_size) {}
  // Moves params along the ascent direction.
  void ascend(Mat& params, const Mat& direction);

 private:
  OptimizerKind kind_;
  double lr_;
  Mat m_, v_;
  int t_ = 0;
};

struct TrainLogRow {
  int iteration;
  double score;
  double grad_norm;
};

struct MetaTrainResult {
  HyperPosteriorApprox approx;
  std::vector<TrainLogRow> log;
};

std::vector<double> task_betas(const std::vector<TaskDataset>& tasks, LambdaBetaMode mode);
double meta_lambda(int n, LambdaBetaMode mode);

MetaTrainResult meta_train(const std::vector<TaskDataset>& tasks, const MetaTrainConfig& cfg, const MetaModel& model);

struct ViResult {
  double objective;
  Vec grad;  // [d mean, d log_std]
};

ViResult vi_objective_and_grad(const MetaModel& model, const Vec& mean, const Vec& log_std,
                               const std::vector<const TaskDataset*>& batch, int n, double harmonic_m,
                               const DiagonalGaussian& hyper_prior, double tempering, int num_samples,
                               const RngStream& rng, bool include_hyper_prior = true);

struct TargetTrainConfig {
  int num_particles = 5;
  int steps = 200;
  double step_size = 1e-2;
  OptimizerKind optimizer = OptimizerKind::adam;
  double bandwidth = 0.0;
};

// One L x hyp_dim particle block per prior, in prior order.
std::vector<Mat> target_train(const BnnModel& model, const std::vector<Vec>& priors, const TaskDataset& data,
                              double beta, const TargetTrainConfig& cfg, RngStream rng,
                              const std::vector<Mat>* warm_start = nullptr);

}  // namespace pacoh
