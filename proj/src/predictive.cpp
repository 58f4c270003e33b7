#include "pacoh/predictive.hpp"

#include <cmath>

namespace pacoh {

GaussianMixture GaussianMixture::single(double mean, double variance) {
  GaussianMixture g;
  g.means = Vec::Constant(1, mean);
  g.variances = Vec::Constant(1, variance);
  return g;
}

double GaussianMixture::mean() const {
  if (means.size() == 0) throw EmptyInput("GaussianMixture: no components");
  return means.mean();
}

double GaussianMixture::variance() const {
  const double mu = mean();
  return (variances.array() + (means.array() - mu).square()).mean();
}

double GaussianMixture::cdf(double y) const {
  if (means.size() == 0) throw EmptyInput("GaussianMixture: no components");
  double acc = 0.0;
  for (Eigen::Index k = 0; k < means.size(); ++k) {
    const double sd = std::sqrt(variances[k]);
    if (sd > 0.0)
      acc += normal_cdf((y - means[k]) / sd);
    else
      acc += y >= means[k] ? 1.0 : 0.0;
  }
  return acc / static_cast<double>(means.size());
}

double GaussianMixture::mean_std() const {
  const double mu = mean();
  return std::sqrt((means.array() - mu).square().mean());
}

std::vector<GaussianMixture> gp_mixture_predict(const GpModel& model, const std::vector<Vec>& priors,
                                                const TaskDataset& context, const Mat& x_query) {
  if (priors.empty()) throw EmptyInput("gp_mixture_predict: no priors");
  const auto k = static_cast<Eigen::Index>(priors.size());
  std::vector<GaussianMixture> out(static_cast<size_t>(x_query.rows()));
  for (auto& g : out) {
    g.means.resize(k);
    g.variances.resize(k);
  }
  for (Eigen::Index p = 0; p < k; ++p) {
    auto pred = gp_posterior_predict(model, priors[static_cast<size_t>(p)], context.inputs, context.targets, x_query);
    for (size_t j = 0; j < out.size(); ++j) {
      out[j].means[p] = pred[j].mean;
      out[j].variances[p] = pred[j].variance;
    }
  }
  return out;
}

std::vector<GaussianMixture> bnn_mixture_predict(const BnnModel& model, const std::vector<Mat>& particle_sets,
                                                 const Mat& x_query) {
  Eigen::Index total = 0;
  for (const auto& s : particle_sets) total += s.rows();
  if (total == 0) throw EmptyInput("bnn_mixture_predict: no particles");
  std::vector<GaussianMixture> out(static_cast<size_t>(x_query.rows()));
  for (auto& g : out) {
    g.means.resize(total);
    g.variances.resize(total);
  }
  Eigen::Index c = 0;
  for (const auto& set : particle_sets) {
    for (Eigen::Index l = 0; l < set.rows(); ++l, ++c) {
      const Vec h = set.row(l).transpose();
      const Mat f = bnn_outputs(model, h, x_query);
      const double var = std::exp(2.0 * h[h.size() - 1]);
      for (size_t j = 0; j < out.size(); ++j) {
        out[j].means[c] = f(static_cast<Eigen::Index>(j), 0);
        out[j].variances[c] = var;
      }
    }
  }
  return out;
}

Mat bnn_class_probabilities(const BnnModel& model, const std::vector<Mat>& particle_sets, const Mat& x_query) {
  Mat acc;
  int count = 0;
  for (const auto& set : particle_sets) {
    for (Eigen::Index l = 0; l < set.rows(); ++l) {
      const Mat logits = bnn_outputs(model, set.row(l).transpose(), x_query);
      Mat p(logits.rows(), logits.cols());
      for (Eigen::Index j = 0; j < logits.rows(); ++j) p.row(j) = softmax(logits.row(j).transpose()).transpose();
      if (count == 0)
        acc = p;
      else
        acc += p;
      ++count;
    }
  }
  if (count == 0) throw EmptyInput("bnn_class_probabilities: no particles");
  return acc / static_cast<double>(count);
}

}  // namespace pacoh
