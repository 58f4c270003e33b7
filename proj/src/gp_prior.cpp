#include "pacoh/gp_prior.hpp"

#include <cmath>

namespace pacoh {

namespace {

Mat sq_dists(const Mat& a, const Mat& b) {
  Mat d = (-2.0 * a * b.transpose()).colwise() + a.rowwise().squaredNorm();
  d.rowwise() += b.rowwise().squaredNorm().transpose();
  return d.cwiseMax(0.0);
}

Mat kernel_from_features(const Mat& fa, const Mat& fb) {
  return 0.5 * (-sq_dists(fa, fb)).array().exp().matrix();
}

void check_phi(const GpModel& model, const Vec& phi) {
  if (phi.size() != model.dim()) throw DimensionMismatch("gp: prior parameter length");
}

}  // namespace

GpModel GpModel::make(int input_dim, const std::vector<int>& hidden, int feature_dim, double noise_variance) {
  GpModel m;
  m.mean_arch = {input_dim, hidden, 1};
  m.feature_arch = {input_dim, hidden, feature_dim};
  m.noise_variance = noise_variance;
  m.mean_arch.validate();
  m.feature_arch.validate();
  if (!(noise_variance > 0.0)) throw InvalidRange("gp: noise variance must be positive");
  return m;
}

Eigen::Map<const Vec> GpModel::mean_params(const Vec& phi) const {
  return {phi.data(), mean_arch.param_count()};
}

Eigen::Map<const Vec> GpModel::feature_params(const Vec& phi) const {
  return {phi.data() + mean_arch.param_count(), feature_arch.param_count()};
}

double gp_kernel(const GpModel& model, const Vec& phi, const Vec& x, const Vec& x2) {
  check_phi(model, phi);
  Vec f1 = mlp_forward(model.feature_arch, model.feature_params(phi), x);
  Vec f2 = mlp_forward(model.feature_arch, model.feature_params(phi), x2);
  return 0.5 * std::exp(-(f1 - f2).squaredNorm());
}

Mat gp_kernel_matrix(const GpModel& model, const Vec& phi, const Mat& x) {
  check_phi(model, phi);
  Mat f = mlp_forward_batch(model.feature_arch, model.feature_params(phi), x);
  return kernel_from_features(f, f);
}

double gp_mll(const GpModel& model, const Vec& phi, const Mat& x, const Vec& y) {
  check_phi(model, phi);
  const Eigen::Index m = x.rows();
  if (m < 1 || y.size() != m) throw DimensionMismatch("gp_mll: dataset shape");
  Mat f = mlp_forward_batch(model.feature_arch, model.feature_params(phi), x);
  Vec r = y - mlp_forward_batch(model.mean_arch, model.mean_params(phi), x).col(0);
  Mat kt = kernel_from_features(f, f);
  kt.diagonal().array() += model.noise_variance;
  SpdFactor chol(kt);
  Vec alpha = chol.solve(r);
  return -0.5 * r.dot(alpha) - 0.5 * chol.log_det() - 0.5 * static_cast<double>(m) * kLog2Pi;
}

ValueGrad gp_mll_with_grad(const GpModel& model, const Vec& phi, const Mat& x, const Vec& y) {
  check_phi(model, phi);
  const Eigen::Index m = x.rows();
  if (m < 1 || y.size() != m) throw DimensionMismatch("gp_mll: dataset shape");
  auto mean_p = model.mean_params(phi);
  auto feat_p = model.feature_params(phi);
  Mat f = mlp_forward_batch(model.feature_arch, feat_p, x);
  Vec r = y - mlp_forward_batch(model.mean_arch, mean_p, x).col(0);
  Mat k = kernel_from_features(f, f);
  Mat kt = k;
  kt.diagonal().array() += model.noise_variance;
  SpdFactor chol(kt);
  Vec alpha = chol.solve(r);

  ValueGrad out;
  out.value = -0.5 * r.dot(alpha) - 0.5 * chol.log_det() - 0.5 * static_cast<double>(m) * kLog2Pi;
  out.grad.resize(model.dim());

  // d mll / d mean(x_i) = alpha_i
  Mat up_mean = alpha;
  out.grad.head(model.mean_arch.param_count()) = mlp_backward_batch(model.mean_arch, mean_p, x, up_mean).params;

  // d mll / d K = 0.5 (alpha alpha^T - K~^-1); chain through k_ij = 0.5 exp(-|f_i - f_j|^2).
  Mat g = 0.5 * (alpha * alpha.transpose() - chol.inverse());
  Mat w = g.cwiseProduct(k);
  Mat up_feat = -4.0 * (w.rowwise().sum().asDiagonal() * f - w * f);
  out.grad.tail(model.feature_arch.param_count()) =
      mlp_backward_batch(model.feature_arch, feat_p, x, up_feat).params;
  return out;
}

Vec gp_mll_grad(const GpModel& model, const Vec& phi, const Mat& x, const Vec& y) {
  return gp_mll_with_grad(model, phi, x, y).grad;
}

std::vector<GpPredictive> gp_posterior_predict(const GpModel& model, const Vec& phi, const Mat& x_ctx,
                                               const Vec& y_ctx, const Mat& x_query) {
  check_phi(model, phi);
  auto mean_p = model.mean_params(phi);
  auto feat_p = model.feature_params(phi);
  Vec mq = mlp_forward_batch(model.mean_arch, mean_p, x_query).col(0);
  std::vector<GpPredictive> out(static_cast<size_t>(x_query.rows()));
  if (x_ctx.rows() == 0) {
    for (Eigen::Index q = 0; q < x_query.rows(); ++q) out[q] = {mq[q], 0.5 + model.noise_variance};
    return out;
  }
  if (y_ctx.size() != x_ctx.rows()) throw DimensionMismatch("gp_posterior_predict: context shape");
  Mat fc = mlp_forward_batch(model.feature_arch, feat_p, x_ctx);
  Mat fq = mlp_forward_batch(model.feature_arch, feat_p, x_query);
  Mat kt = kernel_from_features(fc, fc);
  kt.diagonal().array() += model.noise_variance;
  SpdFactor chol(kt);
  Vec r = y_ctx - mlp_forward_batch(model.mean_arch, mean_p, x_ctx).col(0);
  Vec alpha = chol.solve(r);
  Mat kqc = kernel_from_features(fq, fc);
  Mat v = chol.lower().triangularView<Eigen::Lower>().solve(kqc.transpose());
  for (Eigen::Index q = 0; q < x_query.rows(); ++q) {
    double latent = std::max(0.5 - v.col(q).squaredNorm(), 0.0);
    out[q] = {mq[q] + kqc.row(q).dot(alpha), latent + model.noise_variance};
  }
  return out;
}

}  // namespace pacoh
