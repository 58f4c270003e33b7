#pragma once

#include <vector>

#include "pacoh/bnn_prior.hpp"
#include "pacoh/gp_prior.hpp"

namespace pacoh {

// Equally weighted mixture of univariate Gaussians.
struct GaussianMixture {
  Vec means;
  Vec variances;

  static GaussianMixture single(double mean, double variance);
  Eigen::Index size() const { return means.size(); }
  double mean() const;
  double variance() const;
  double cdf(double y) const;
  // Std of the component means (epistemic spread).
  double mean_std() const;
};

// One mixture per query row; components are the GP posteriors of each prior.
std::vector<GaussianMixture> gp_mixture_predict(const GpModel& model, const std::vector<Vec>& priors,
                                                const TaskDataset& context, const Mat& x_query);

// One mixture per query row; components are all particles of all priors,
// each contributing N(h_theta(x), sigma^2).
std::vector<GaussianMixture> bnn_mixture_predict(const BnnModel& model, const std::vector<Mat>& particle_sets,
                                                 const Mat& x_query);

// Averaged class probabilities (m x classes).
Mat bnn_class_probabilities(const BnnModel& model, const std::vector<Mat>& particle_sets, const Mat& x_query);

}  // namespace pacoh
