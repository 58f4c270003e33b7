#include "pacoh/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>
#include <utility>

#include "pacoh/environments.hpp"

namespace pacoh {

namespace {

double sample_sd(const Vec& v) {
  if (v.size() < 2) return 0.0;
  double mean = v.mean();
  return std::sqrt((v.array() - mean).square().sum() / static_cast<double>(v.size() - 1));
}

void check_delta(double delta) {
  if (!(delta > 0.0 && delta <= 1.0)) throw InvalidRange("bounds: delta must be in (0, 1]");
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// log(1 + exp(-z)), stable for large |z|.
double softplus_neg(double z) { return std::max(-z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

struct BlrPieces {
  SpdFactor scaled;  // prior_var * posterior precision
  Vec g;             // (tau / lik_var) X^T (y - X mu)
  Vec resid;
  double tau;
};

BlrPieces blr_pieces(const Vec& mu, double prior_var, const Mat& x, const Vec& y, double beta, double lik_var) {
  if (x.cols() != mu.size() || y.size() != x.rows()) throw DimensionMismatch("blr_log_z: shapes");
  const double tau = beta / static_cast<double>(x.rows());
  Mat a = Mat::Identity(mu.size(), mu.size()) + (tau * prior_var / lik_var) * (x.transpose() * x);
  Vec resid = y - x * mu;
  Vec g = (tau / lik_var) * (x.transpose() * resid);
  return {SpdFactor(a), g, resid, tau};
}

}  // namespace

double complexity_bounded(int n, int m, double lambda, double beta, double delta, double a, double b) {
  if (b < a) throw InvalidRange("complexity_bounded: b < a");
  check_delta(delta);
  const double w = b - a;
  return (lambda / (8.0 * n) + beta / (8.0 * m)) * w * w + std::log(1.0 / delta) / std::sqrt(static_cast<double>(n));
}

double complexity_subgamma(int n, int m, double lambda, double beta, double delta, double s1_sq, double c1,
                           double s2_sq, double c2) {
  check_delta(delta);
  const double r1 = 1.0 - c1 * beta / m;
  const double r2 = 1.0 - c2 * lambda / n;
  if (!(r1 > 0.0) || !(r2 > 0.0)) throw OutOfValidityWindow("complexity_subgamma: beta or lambda outside the window");
  return beta * s1_sq / (2.0 * m * r1) + lambda * s2_sq / (2.0 * n * r2) +
         std::log(1.0 / delta) / std::sqrt(static_cast<double>(n));
}

double blr_log_z(const Vec& prior_mean, double prior_var, const Mat& x, const Vec& y, double beta, double lik_var) {
  return blr_log_z_with_grad(prior_mean, prior_var, x, y, beta, lik_var).value;
}

ValueGrad blr_log_z_with_grad(const Vec& prior_mean, double prior_var, const Mat& x, const Vec& y, double beta,
                              double lik_var) {
  if (x.rows() == 0) return {0.0, Vec::Zero(prior_mean.size())};
  auto p = blr_pieces(prior_mean, prior_var, x, y, beta, lik_var);
  const double m = static_cast<double>(x.rows());
  Vec sg = p.scaled.solve(p.g);
  ValueGrad out;
  out.value = -0.5 * p.tau * m * std::log(2.0 * M_PI * lik_var) - 0.5 * p.scaled.log_det() -
              0.5 * p.tau / lik_var * p.resid.squaredNorm() + 0.5 * prior_var * p.g.dot(sg);
  out.grad = sg;
  return out;
}

GaussianPosterior blr_gibbs_posterior(const Vec& prior_mean, double prior_var, const Mat& x, const Vec& y,
                                      double beta, double lik_var) {
  const Eigen::Index d = prior_mean.size();
  if (x.rows() == 0) return {prior_mean, prior_var * Mat::Identity(d, d)};
  auto p = blr_pieces(prior_mean, prior_var, x, y, beta, lik_var);
  return {prior_mean + prior_var * p.scaled.solve(p.g), prior_var * p.scaled.inverse()};
}

double blr_expected_loss(const GaussianPosterior& q, const Vec& w_star, double lik_var, double sx2, double seps2) {
  const double sq = (q.mean - w_star).squaredNorm() + q.cov.trace();
  return 0.5 * std::log(2.0 * M_PI * lik_var) + (sx2 * sq + seps2) / (2.0 * lik_var);
}

BlrCgfConstants blr_cgf_constants(const Vec& w_star, double lik_var, double sx2, double prior_var,
                                  double hyper_prior_var, double seps2, int d, double gamma) {
  if (!(gamma > 0.0)) throw OutOfValidityWindow("blr_cgf_constants: gamma must be positive");
  const double s2 = lik_var;
  const double spread = prior_var + hyper_prior_var;
  BlrCgfConstants k{};
  k.theta = sx2 * w_star.squaredNorm() + seps2;
  k.c = d / s2 * sx2 * spread + gamma / (s2 * s2) * d * sx2 * spread * k.theta - k.theta / s2;
  if (k.c > 0.0 && gamma >= 1.0 / k.c)
    throw OutOfValidityWindow("blr_cgf_constants: gamma outside (0, 1/c) with c = " + std::to_string(k.c));
  k.s_sq = k.theta / s2 * (1.0 / gamma - k.c) + k.c / gamma;
  k.psi1_term = k.s_sq / (2.0 * (1.0 / gamma - k.c));
  return k;
}

BlrCgf2Constants blr_cgf2_constants(const Vec& task_mean, double task_var, double hyper_prior_var, double sx2,
                                    double lik_var, int d, int n) {
  BlrCgf2Constants k{};
  k.c = sx2 / lik_var * (hyper_prior_var + task_var);
  k.s_sq = sx2 / lik_var * k.c * task_mean.squaredNorm() + d * k.c * k.c;
  const double rn = std::sqrt(static_cast<double>(n));
  if (k.c > 0.0 && rn <= k.c)
    throw OutOfValidityWindow("blr_cgf2_constants: sqrt(n) must exceed c = " + std::to_string(k.c));
  k.psi2_term = k.s_sq / (2.0 * (rn - k.c));
  return k;
}

std::string BoundReport::csv_header() {
  return "kind,n,m,lambda,beta,delta,empirical_term,kl_term,complexity,psi1,psi2,total,mc_std_error";
}

std::string BoundReport::csv_row() const {
  std::ostringstream os;
  os << std::setprecision(10) << kind << ',' << n << ',' << m << ',' << lambda << ',' << beta << ',' << delta << ','
     << empirical_term << ',' << kl_term << ',' << complexity << ',' << psi1 << ',' << psi2 << ',' << total << ','
     << mc_std_error;
  return os.str();
}

LogZSample sample_log_z(const std::vector<TaskDataset>& tasks, const DiagonalGaussian& hyper_prior, const LogZFn& log_z,
                        int mc_priors, RngStream rng) {
  if (mc_priors < 1) throw InvalidRange("sample_log_z: mc_priors must be >= 1");
  LogZSample s;
  s.log_z.resize(mc_priors, static_cast<Eigen::Index>(tasks.size()));
  const Vec sd = hyper_prior.std();
  for (int j = 0; j < mc_priors; ++j) {
    RngStream rj = rng.fork(static_cast<std::uint64_t>(j));
    Vec prior = hyper_prior.mean + sd.cwiseProduct(rj.normal_vector(hyper_prior.dim()));
    for (size_t i = 0; i < tasks.size(); ++i) {
      RngStream ri = rj.fork(static_cast<std::uint64_t>(tasks[i].id) + 1);
      s.log_z(j, static_cast<Eigen::Index>(i)) = log_z(prior, tasks[i], ri);
    }
    s.priors.push_back(std::move(prior));
  }
  if (!s.log_z.allFinite()) throw NumericalError("sample_log_z: non-finite log Z");
  return s;
}

namespace {

BoundReport base_report(const char* kind, const BoundTerms& t) {
  check_delta(t.delta);
  BoundReport r;
  r.kind = kind;
  r.n = t.n;
  r.m = t.m;
  r.lambda = t.lambda;
  r.beta = t.beta;
  r.delta = t.delta;
  r.complexity = t.complexity;
  r.psi1 = t.psi1;
  r.psi2 = t.psi2;
  return r;
}

}  // namespace

Vec pacoh_weights(const LogZSample& sample, double lambda, double beta) {
  const double n = static_cast<double>(sample.log_z.cols());
  const double t = lambda / (n * beta + lambda);
  return softmax(t * sample.log_z.rowwise().sum());
}

BoundReport pacoh_bound(const LogZSample& sample, const BoundTerms& terms) {
  BoundReport r = base_report("pacoh", terms);
  const double n = static_cast<double>(terms.n);
  const double t = terms.lambda / (n * terms.beta + terms.lambda);
  const double c = 1.0 / terms.lambda + 1.0 / (n * terms.beta);
  const Vec s = sample.log_z.rowwise().sum();
  const Vec u = t * s;
  const double count = static_cast<double>(s.size());
  const double log_z2 = logsumexp(u) - std::log(count);
  const Vec w = softmax(u);
  r.empirical_term = -w.dot(s) / (n * terms.beta);
  r.kl_term = c * (w.dot(u) - log_z2);
  r.total = -c * log_z2 + terms.complexity;
  const Vec e = (u.array() - u.maxCoeff()).exp().matrix();
  r.mc_std_error = c * sample_sd(e) / (std::sqrt(count) * e.mean());
  return r;
}

BoundReport per_task_bound(const LogZSample& sample, const BoundTerms& terms) {
  BoundReport r = base_report("per_task", terms);
  const double n = static_cast<double>(terms.n);
  const Vec s = sample.log_z.rowwise().sum();
  r.empirical_term = -s.mean() / (n * terms.beta);
  r.total = r.empirical_term + terms.complexity;
  r.mc_std_error = sample_sd(s) / (std::sqrt(static_cast<double>(s.size())) * n * terms.beta);
  return r;
}

BoundReport pacoh_bound(const std::vector<TaskDataset>& tasks, const DiagonalGaussian& hyper_prior,
                        const BoundTerms& terms, const LogZFn& log_z, int mc_priors, RngStream rng) {
  return pacoh_bound(sample_log_z(tasks, hyper_prior, log_z, mc_priors, rng), terms);
}

BoundReport per_task_bound(const std::vector<TaskDataset>& tasks, const DiagonalGaussian& hyper_prior,
                           const BoundTerms& terms, const LogZFn& log_z, int mc_priors, RngStream rng) {
  return per_task_bound(sample_log_z(tasks, hyper_prior, log_z, mc_priors, rng), terms);
}

DeltaEstimate delta_improvement(const LogZSample& sample, double lambda, double beta) {
  const double n = static_cast<double>(sample.log_z.cols());
  const double t = lambda / (n * beta + lambda);
  const double c = 1.0 / lambda + 1.0 / (n * beta);
  const Vec s = sample.log_z.rowwise().sum();
  const double count = static_cast<double>(s.size());
  // Centering at s[0] first keeps identical samples exactly identical.
  const Vec shifted = s.array() - s[0];
  const double center = s[0] + shifted.mean();
  const Vec centered = s.array() - center;
  DeltaEstimate d{};
  d.value = c * (logsumexp(t * centered) - std::log(count));
  const Vec e = (t * centered.array() - (t * centered).maxCoeff()).exp().matrix();
  const Vec influence = c * (e.array() / e.mean() - 1.0) - centered.array() / (n * beta);
  d.std_error = sample_sd(influence) / std::sqrt(count);
  return d;
}

double zero_one_loss(const Vec& w, const Mat& x, const Vec& y) {
  if (x.cols() != w.size() || y.size() != x.rows()) throw DimensionMismatch("zero_one_loss: shapes");
  if (x.rows() == 0) return 0.0;
  const Vec proj = x * w;
  int errors = 0;
  for (Eigen::Index j = 0; j < proj.size(); ++j) errors += ((proj[j] > 0.0) != (y[j] > 0.5));
  return static_cast<double>(errors) / static_cast<double>(x.rows());
}

double logistic_loss(const Vec& w, const Mat& x, const Vec& y) {
  if (x.cols() != w.size() || y.size() != x.rows()) throw DimensionMismatch("logistic_loss: shapes");
  if (x.rows() == 0) return 0.0;
  const Vec proj = x * w;
  double acc = 0.0;
  for (Eigen::Index j = 0; j < proj.size(); ++j) acc += softplus_neg((2.0 * y[j] - 1.0) * proj[j]);
  return acc / static_cast<double>(x.rows());
}

namespace {

// Per-draw mean loss for the draws W (rows) on dataset (x, y).
Vec classifier_losses(const Mat& w, const Mat& x, const Vec& y, ClassifierLoss loss) {
  const Mat proj = w * x.transpose();
  Vec out(w.rows());
  const double m = static_cast<double>(x.rows());
  for (Eigen::Index l = 0; l < w.rows(); ++l) {
    double acc = 0.0;
    for (Eigen::Index j = 0; j < x.rows(); ++j) {
      const double z = proj(l, j);
      if (loss == ClassifierLoss::zero_one)
        acc += ((z > 0.0) != (y[j] > 0.5));
      else
        acc += softplus_neg((2.0 * y[j] - 1.0) * z);
    }
    out[l] = m > 0.0 ? acc / m : 0.0;
  }
  return out;
}

Mat prior_draws(const Vec& mean, double std, int draws, RngStream& rng) {
  Mat w(draws, mean.size());
  for (int l = 0; l < draws; ++l)
    for (Eigen::Index c = 0; c < mean.size(); ++c) w(l, c) = mean[c] + std * rng.normal();
  return w;
}

}  // namespace

double classifier_log_z(const Vec& prior_mean, double prior_std, const TaskDataset& task, double beta,
                        ClassifierLoss loss, int draws, RngStream& rng) {
  if (draws < 1) throw InvalidRange("classifier_log_z: draws must be >= 1");
  const Mat w = prior_draws(prior_mean, prior_std, draws, rng);
  const Vec l = classifier_losses(w, task.inputs, task.targets, loss);
  return logsumexp(-beta * l) - std::log(static_cast<double>(draws));
}

namespace {

// Mode and Hessian of |w - mu|^2 / (2 std^2) + beta * mean logistic loss, by damped Newton.
std::pair<Vec, Mat> gibbs_laplace(const Vec& mu, double prior_std, const TaskDataset& task, double beta) {
  const Mat& x = task.inputs;
  const Vec s = 2.0 * task.targets.array() - 1.0;
  const double m = static_cast<double>(std::max<Eigen::Index>(x.rows(), 1));
  const double prec = 1.0 / (prior_std * prior_std);
  auto objective = [&](const Vec& w) {
    const Vec z = x * w;
    double l = 0.0;
    for (Eigen::Index j = 0; j < z.size(); ++j) l += softplus_neg(s[j] * z[j]);
    return 0.5 * prec * (w - mu).squaredNorm() + beta * l / m;
  };
  Vec w = mu;
  Mat h;
  for (int it = 0; it < 100; ++it) {
    const Vec z = x * w;
    Vec g = prec * (w - mu);
    h = prec * Mat::Identity(w.size(), w.size());
    for (Eigen::Index j = 0; j < z.size(); ++j) {
      const double p = sigmoid(z[j]);
      g -= beta / m * s[j] * sigmoid(-s[j] * z[j]) * x.row(j).transpose();
      h += beta / m * p * (1.0 - p) * x.row(j).transpose() * x.row(j);
    }
    const Vec step = h.llt().solve(g);
    const double f0 = objective(w);
    double t = 1.0;
    while (t > 1e-10 && objective(w - t * step) > f0 - 0.25 * t * g.dot(step)) t *= 0.5;
    w -= t * step;
    if (std::abs(g.dot(step)) < 1e-18) break;
  }
  return {w, h};
}

}  // namespace

double gibbs_misclassification(const Vec& prior_mean, double prior_std, const TaskDataset& task, const Vec& w_star,
                               double beta, int posterior_draws, const Mat& test_x, RngStream& rng) {
  if (posterior_draws < 1) throw InvalidRange("gibbs_misclassification: posterior_draws must be >= 1");
  Mat w = prior_draws(prior_mean, prior_std, posterior_draws, rng);
  Vec weights = softmax(-beta * classifier_losses(w, task.inputs, task.targets, ClassifierLoss::logistic));
  double ess = 1.0 / weights.squaredNorm();
  if (ess < 50.0) {
    // The posterior sits in the prior's tail: reweight draws from a widened Laplace fit instead.
    const auto [mode, hess] = gibbs_laplace(prior_mean, prior_std, task, beta);
    const Mat chol = Eigen::LLT<Mat>(hess / 4.0).matrixL();
    const Eigen::Index d = mode.size();
    Vec log_w(posterior_draws);
    for (int l = 0; l < posterior_draws; ++l) {
      const Vec z = rng.normal_vector(d);
      const Vec wl = mode + chol.transpose().triangularView<Eigen::Upper>().solve(z);
      w.row(l) = wl.transpose();
      log_w[l] = 0.5 * z.squaredNorm() - 0.5 * (wl - prior_mean).squaredNorm() / (prior_std * prior_std);
    }
    log_w -= beta * classifier_losses(w, task.inputs, task.targets, ClassifierLoss::logistic);
    weights = softmax(log_w);
    ess = 1.0 / weights.squaredNorm();
    if (ess < 50.0)
      throw EffectiveSampleSizeTooLow("gibbs_misclassification: ESS " + std::to_string(ess) + " < 50");
  }
  Vec p(test_x.rows());
  for (Eigen::Index j = 0; j < test_x.rows(); ++j) p[j] = sigmoid(test_x.row(j).dot(w_star));
  const double floor = 1e-14 * weights.maxCoeff();
  double err = 0.0;
  for (Eigen::Index l = 0; l < w.rows(); ++l) {
    if (weights[l] < floor) continue;
    const Vec proj = test_x * w.row(l).transpose();
    double e = 0.0;
    for (Eigen::Index j = 0; j < test_x.rows(); ++j) e += proj[j] > 0.0 ? 1.0 - p[j] : p[j];
    err += weights[l] * e / static_cast<double>(test_x.rows());
  }
  return err;
}

TransferEstimate misclassification_transfer_error(const std::vector<Vec>& prior_means, const Vec& weights,
                                                  double prior_std, const LogregEnvConfig& env, int m, double beta,
                                                  int num_tasks, int test_points, int posterior_draws,
                                                  RngStream rng) {
  if (prior_means.empty() || static_cast<Eigen::Index>(prior_means.size()) != weights.size())
    throw LengthMismatch("misclassification_transfer_error: priors and weights");
  Vec cdf(weights.size());
  double acc = 0.0;
  for (Eigen::Index j = 0; j < weights.size(); ++j) cdf[j] = (acc += weights[j]);
  Vec errs(num_tasks);
  for (int t = 0; t < num_tasks; ++t) {
    RngStream rt = rng.fork(static_cast<std::uint64_t>(t));
    const Vec w_star = sample_logreg_weights(env, rt);
    const TaskDataset task = sample_logreg_task(env, w_star, m, t, rt);
    const double u = rt.uniform() * acc;
    Eigen::Index j = 0;
    while (j + 1 < cdf.size() && cdf[j] < u) ++j;
    const Mat test_x = sample_logreg_inputs(test_points, env.d, rt);
    errs[t] = gibbs_misclassification(prior_means[static_cast<size_t>(j)], prior_std, task, w_star, beta,
                                      posterior_draws, test_x, rt);
  }
  return {errs.mean(), sample_sd(errs) / std::sqrt(static_cast<double>(num_tasks))};
}

}  // namespace pacoh
