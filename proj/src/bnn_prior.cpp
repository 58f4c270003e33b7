#include "pacoh/bnn_prior.hpp"

#include <cmath>

namespace pacoh {

Vec BnnModel::prior_center(double log_std) const {
  Vec phi = Vec::Zero(dim());
  phi[hyp_dim() - 1] = noise_prior_mean;
  phi.tail(hyp_dim()).setConstant(log_std);
  return phi;
}

DiagonalGaussian BnnModel::prior(const Vec& phi) const {
  if (phi.size() != dim()) throw DimensionMismatch("bnn: prior parameter length");
  return DiagonalGaussian(phi.head(hyp_dim()), phi.tail(hyp_dim()));
}

Mat bnn_outputs(const BnnModel& model, const Vec& h, const Mat& x) {
  if (h.size() != model.hyp_dim()) throw DimensionMismatch("bnn: hypothesis length");
  return mlp_forward_batch(model.arch, h.head(model.num_weights()), x);
}

double nll_loss(const BnnModel& model, const Vec& h, const Vec& x, double y) {
  Mat xr = x.transpose();
  Vec yr = Vec::Constant(1, y);
  return empirical_loss(model, h, xr, yr, false).value;
}

ValueGrad empirical_loss(const BnnModel& model, const Vec& h, const Mat& x, const Vec& y, bool want_grad) {
  if (h.size() != model.hyp_dim()) throw DimensionMismatch("bnn: hypothesis length");
  if (y.size() != x.rows() || x.rows() == 0) throw DimensionMismatch("bnn: dataset shape");
  const int p = model.num_weights();
  auto theta = h.head(p);
  const double m = static_cast<double>(x.rows());
  const MlpTrace trace = mlp_trace(model.arch, theta, x);
  const Mat out = trace.output();
  ValueGrad res;
  Mat up;
  double dlogsig = 0.0;
  if (model.likelihood == Likelihood::regression) {
    const double log_sigma = h[p];
    const double var = std::exp(2.0 * log_sigma);
    Vec r = y - out.col(0);
    res.value = 0.5 * (kLog2Pi + 2.0 * log_sigma) + r.squaredNorm() / (2.0 * var * m);
    if (want_grad) {
      up = -r / (var * m);
      dlogsig = 1.0 - r.squaredNorm() / (var * m);
    }
  } else {
    double total = 0.0;
    if (want_grad) up.resize(out.rows(), out.cols());
    for (Eigen::Index j = 0; j < out.rows(); ++j) {
      Vec logits = out.row(j).transpose();
      double lse = logsumexp(logits);
      auto label = static_cast<Eigen::Index>(y[j]);
      if (label < 0 || label >= logits.size()) throw InvalidRange("bnn: class label out of range");
      total += lse - logits[label];
      if (want_grad) {
        Vec g = (logits.array() - lse).exp().matrix();
        g[label] -= 1.0;
        up.row(j) = g.transpose() / m;
      }
    }
    res.value = total / m;
  }
  if (!std::isfinite(res.value)) throw DivergenceDetected("bnn: non-finite loss");
  if (want_grad) {
    res.grad.resize(model.hyp_dim());
    res.grad.head(p) = mlp_backward_trace(model.arch, theta, trace, up).params;
    res.grad[p] = model.learn_noise ? dlogsig : 0.0;
  }
  return res;
}

MllEstimateWithGrad mll_lse_with_grad(const BnnModel& model, const Vec& phi, const Mat& x, const Vec& y,
                                      double beta, int num_samples, RngStream rng, bool want_grad) {
  if (num_samples < 1) throw InvalidRange("mll_estimate_lse: L must be >= 1");
  if (!(beta > 0.0)) throw InvalidRange("mll_estimate_lse: beta must be positive");
  const int hd = model.hyp_dim();
  const int p = model.num_weights();
  if (phi.size() != model.dim()) throw DimensionMismatch("bnn: prior parameter length");
  Vec mu = phi.head(hd);
  Vec sigma = phi.tail(hd).array().exp().matrix();

  std::vector<Vec> eps(num_samples);
  std::vector<ValueGrad> losses(num_samples);
  MllEstimateWithGrad out;
  out.estimate.per_sample_losses.resize(num_samples);
  std::vector<bool> capped(num_samples, false);
  for (int l = 0; l < num_samples; ++l) {
    eps[l] = rng.normal_vector(hd);
    if (!model.learn_noise) eps[l][p] = 0.0;
    Vec theta = mu + sigma.cwiseProduct(eps[l]);
    double loss;
    try {
      losses[l] = empirical_loss(model, theta, x, y, want_grad);
      loss = losses[l].value;
    } catch (const DivergenceDetected&) {
      loss = model.loss_cap;
      capped[l] = true;
    }
    if (loss >= model.loss_cap) {
      loss = model.loss_cap;
      capped[l] = true;
    }
    out.estimate.per_sample_losses[l] = loss;
  }
  Vec logits = -beta * out.estimate.per_sample_losses;
  out.estimate.value = logsumexp(logits) - std::log(static_cast<double>(num_samples));
  out.estimate.softmax_weights = softmax(logits);
  if (want_grad) {
    out.grad = Vec::Zero(model.dim());
    for (int l = 0; l < num_samples; ++l) {
      if (capped[l]) continue;
      Vec g = (-beta * out.estimate.softmax_weights[l]) * losses[l].grad;
      out.grad.head(hd) += g;
      out.grad.tail(hd) += g.cwiseProduct(sigma).cwiseProduct(eps[l]);
    }
  }
  return out;
}

MllEstimate mll_estimate_lse(const BnnModel& model, const Vec& phi, const Mat& x, const Vec& y, double beta,
                             int num_samples, RngStream rng) {
  return mll_lse_with_grad(model, phi, x, y, beta, num_samples, rng, false).estimate;
}

Vec mll_grad_lse(const BnnModel& model, const Vec& phi, const Mat& x, const Vec& y, double beta,
                 int num_samples, RngStream rng) {
  return mll_lse_with_grad(model, phi, x, y, beta, num_samples, rng, true).grad;
}

}  // namespace pacoh
