#pragma once

#include "pacoh/data.hpp"
#include "pacoh/gp_prior.hpp"
#include "pacoh/mlp.hpp"

namespace pacoh {

enum class Likelihood { regression, classification };

// BNN base learner. A hypothesis is h = (theta, log sigma) with theta the
// network weights and sigma the observation noise std. A prior parameter
// vector is [mu (hyp_dim), log_std (hyp_dim)].
struct BnnModel {
  MlpArchitecture arch{1, {32, 32, 32, 32}, 1};
  Likelihood likelihood = Likelihood::regression;
  double noise_prior_mean = -2.302585092994046;  // log 0.1
  bool learn_noise = true;
  double loss_cap = 1e6;

  int num_weights() const { return arch.param_count(); }
  int hyp_dim() const { return arch.param_count() + 1; }
  int dim() const { return 2 * hyp_dim(); }

  // Prior with zero-mean weights, noise mean log 0.1 and the given log std.
  Vec prior_center(double log_std = 0.0) const;
  DiagonalGaussian prior(const Vec& phi) const;
};

double nll_loss(const BnnModel& model, const Vec& h, const Vec& x, double y);

// Mean loss over a dataset and its gradient with respect to h.
ValueGrad empirical_loss(const BnnModel& model, const Vec& h, const Mat& x, const Vec& y, bool want_grad = true);

// Network outputs for each input row (regression: m x 1; classification: logits).
Mat bnn_outputs(const BnnModel& model, const Vec& h, const Mat& x);

struct MllEstimate {
  double value = 0.0;
  Vec per_sample_losses;
  Vec softmax_weights;
};

MllEstimate mll_estimate_lse(const BnnModel& model, const Vec& phi, const Mat& x, const Vec& y, double beta,
                             int num_samples, RngStream rng);
Vec mll_grad_lse(const BnnModel& model, const Vec& phi, const Mat& x, const Vec& y, double beta,
                 int num_samples, RngStream rng);

struct MllEstimateWithGrad {
  MllEstimate estimate;
  Vec grad;
};

MllEstimateWithGrad mll_lse_with_grad(const BnnModel& model, const Vec& phi, const Mat& x, const Vec& y,
                                      double beta, int num_samples, RngStream rng, bool want_grad = true);

}  // namespace pacoh
