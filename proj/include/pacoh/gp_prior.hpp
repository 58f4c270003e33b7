#pragma once

#include <vector>

#include "pacoh/data.hpp"
#include "pacoh/mlp.hpp"

namespace pacoh {

// GP prior with a neural mean function and the kernel
// k(x, x') = 0.5 * exp(-|f(x) - f(x')|^2) on top of a neural feature map f.
// The prior parameter vector is [mean-net params, feature-net params].
struct GpModel {
  MlpArchitecture mean_arch{1, {32, 32, 32, 32}, 1};
  MlpArchitecture feature_arch{1, {32, 32, 32, 32}, 2};
  double noise_variance = 0.05;

  static GpModel make(int input_dim, const std::vector<int>& hidden, int feature_dim, double noise_variance);
  int dim() const { return mean_arch.param_count() + feature_arch.param_count(); }
  Eigen::Map<const Vec> mean_params(const Vec& phi) const;
  Eigen::Map<const Vec> feature_params(const Vec& phi) const;
};

struct GpPredictive {
  double mean;
  double variance;
};

double gp_kernel(const GpModel& model, const Vec& phi, const Vec& x, const Vec& x2);
Mat gp_kernel_matrix(const GpModel& model, const Vec& phi, const Mat& x);

double gp_mll(const GpModel& model, const Vec& phi, const Mat& x, const Vec& y);
ValueGrad gp_mll_with_grad(const GpModel& model, const Vec& phi, const Mat& x, const Vec& y);
Vec gp_mll_grad(const GpModel& model, const Vec& phi, const Mat& x, const Vec& y);

std::vector<GpPredictive> gp_posterior_predict(const GpModel& model, const Vec& phi, const Mat& x_ctx,
                                               const Vec& y_ctx, const Mat& x_query);

}  // namespace pacoh
