#pragma once

#include <functional>
#include <string>
#include <vector>

#include "pacoh/data.hpp"
#include "pacoh/numerics.hpp"

namespace pacoh {

// Complexity term for losses bounded in [a, b].
double complexity_bounded(int n, int m, double lambda, double beta, double delta, double a = 0.0, double b = 1.0);

// Complexity term for sub-gamma losses: (s1^2, c1) at the data level and
// (s2^2, c2) at the task level.
double complexity_subgamma(int n, int m, double lambda, double beta, double delta, double s1_sq, double c1,
                           double s2_sq, double c2);

// log E_{w ~ N(mu, prior_var I)} exp(-(beta/m) sum_j l(w, x_j, y_j)) with
// l(w, x, y) = 0.5 log(2 pi lik_var) + (y - w^T x)^2 / (2 lik_var).
double blr_log_z(const Vec& prior_mean, double prior_var, const Mat& x, const Vec& y, double beta, double lik_var);
// Same value plus its gradient in the prior mean.
ValueGrad blr_log_z_with_grad(const Vec& prior_mean, double prior_var, const Mat& x, const Vec& y, double beta,
                              double lik_var);

// Gibbs posterior of the linear model: N(mean, cov).
struct GaussianPosterior {
  Vec mean;
  Mat cov;
};
GaussianPosterior blr_gibbs_posterior(const Vec& prior_mean, double prior_var, const Mat& x, const Vec& y,
                                      double beta, double lik_var);

// Expected loss of a Gaussian posterior on a task with weights w_star,
// inputs N(0, sx2 I) and noise variance seps2.
double blr_expected_loss(const GaussianPosterior& q, const Vec& w_star, double lik_var, double sx2, double seps2);

struct BlrCgfConstants {
  double theta;
  double c;
  double s_sq;
  double psi1_term;  // s^2 / (2 (1/gamma - c)), the per-task term for beta = sqrt(m)
};

BlrCgfConstants blr_cgf_constants(const Vec& w_star, double lik_var, double sx2, double prior_var,
                                  double hyper_prior_var, double seps2, int d, double gamma);

struct BlrCgf2Constants {
  double c;
  double s_sq;
  double psi2_term;  // s^2 / (2 (sqrt(n) - c))
};

BlrCgf2Constants blr_cgf2_constants(const Vec& task_mean, double task_var, double hyper_prior_var, double sx2,
                                    double lik_var, int d, int n);

struct BoundReport {
  std::string kind;
  int n = 0;
  int m = 0;
  double lambda = 0.0;
  double beta = 0.0;
  double delta = 0.0;
  double empirical_term = 0.0;
  double kl_term = 0.0;
  double complexity = 0.0;
  double psi1 = 0.0;
  double psi2 = 0.0;
  double total = 0.0;
  double mc_std_error = 0.0;

  static std::string csv_header();
  std::string csv_row() const;
};

// log Z_beta(S, P) for a prior with parameters `prior`.
using LogZFn = std::function<double(const Vec& prior, const TaskDataset& task, RngStream& rng)>;

// Monte-Carlo sample of log Z: entry (j, i) is log Z(S_i, P_j) for the j-th
// prior drawn from the hyper-prior. Bounds that share a sample are coupled.
struct LogZSample {
  std::vector<Vec> priors;
  Mat log_z;  // mc_priors x n
};

LogZSample sample_log_z(const std::vector<TaskDataset>& tasks, const DiagonalGaussian& hyper_prior, const LogZFn& log_z,
                        int mc_priors, RngStream rng);

struct BoundTerms {
  int n;
  int m;
  double lambda;
  double beta;
  double delta;
  double complexity;
  double psi1 = 0.0;
  double psi2 = 0.0;
};

BoundReport pacoh_bound(const LogZSample& sample, const BoundTerms& terms);
BoundReport per_task_bound(const LogZSample& sample, const BoundTerms& terms);

BoundReport pacoh_bound(const std::vector<TaskDataset>& tasks, const DiagonalGaussian& hyper_prior,
                        const BoundTerms& terms, const LogZFn& log_z, int mc_priors, RngStream rng);
BoundReport per_task_bound(const std::vector<TaskDataset>& tasks, const DiagonalGaussian& hyper_prior,
                           const BoundTerms& terms, const LogZFn& log_z, int mc_priors, RngStream rng);

struct DeltaEstimate {
  double value;
  double std_error;
};

// Gap between the per-task and the PACOH bound, computed from the cumulant
// generating function of sum_i log Z_i under the hyper-prior.
DeltaEstimate delta_improvement(const LogZSample& sample, double lambda, double beta);

// Self-normalized weights of the hyper-prior samples under the PACOH.
Vec pacoh_weights(const LogZSample& sample, double lambda, double beta);

// Linear classifier h_w(x) = 1[w^T x > 0] and its 0-1 loss.
double zero_one_loss(const Vec& w, const Mat& x, const Vec& y);
double logistic_loss(const Vec& w, const Mat& x, const Vec& y);

enum class ClassifierLoss { zero_one, logistic };

// LSE importance-sampling estimate of log E_{w ~ N(mu, s^2 I)} exp(-beta L(w, S)).
double classifier_log_z(const Vec& prior_mean, double prior_std, const TaskDataset& task, double beta,
                        ClassifierLoss loss, int draws, RngStream& rng);

struct TransferEstimate {
  double value;
  double std_error;
};

struct LogregEnvConfig;

// Expected 0-1 error of the Gibbs posterior (logistic loss, temperature
// beta) on fresh tasks. Priors are drawn from the weighted set
// {(prior_means[j], weights[j])}; posteriors by self-normalized importance
// sampling from the prior.
TransferEstimate misclassification_transfer_error(const std::vector<Vec>& prior_means, const Vec& weights,
                                                  double prior_std, const LogregEnvConfig& env, int m, double beta,
                                                  int num_tasks, int test_points, int posterior_draws,
                                                  RngStream rng);

// Single-task building block of the estimate above: expected error of the
// Gibbs posterior for task S with true weights w_star. Falls back to a widened
// Laplace proposal when importance sampling from the prior has ESS < 50.
double gibbs_misclassification(const Vec& prior_mean, double prior_std, const TaskDataset& task, const Vec& w_star,
                               double beta, int posterior_draws, const Mat& test_x, RngStream& rng);

}  // namespace pacoh
