#include "pacoh/pacoh_meta.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace pacoh {

namespace {

constexpr std::uint64_t kInitLabel = 1;
constexpr std::uint64_t kIterLabel = 2;

void check_finite(const Mat& m, const char* what) {
  if (!m.allFinite()) throw DivergenceDetected(std::string("meta_train: non-finite ") + what);
}

}  // namespace

std::string to_string(Method m) {
  switch (m) {
    case Method::map:
      return "map";
    case Method::svgd:
      return "svgd";
    case Method::vi:
      return "vi";
  }
  return "?";
}

Method method_from_string(const std::string& s) {
  if (s == "map") return Method::map;
  if (s == "svgd") return Method::svgd;
  if (s == "vi") return Method::vi;
  throw ConfigError("unknown method '" + s + "'");
}

int HyperPosteriorApprox::dim() const {
  return method == Method::vi ? static_cast<int>(vi_mean.size()) : static_cast<int>(particles.cols());
}

std::vector<Vec> HyperPosteriorApprox::priors(int num_samples, RngStream rng) const {
  std::vector<Vec> out;
  if (method == Method::vi) {
    Vec sd = vi_log_std.array().exp().matrix();
    for (int k = 0; k < num_samples; ++k) out.push_back(vi_mean + sd.cwiseProduct(rng.normal_vector(vi_mean.size())));
  } else {
    for (Eigen::Index k = 0; k < particles.rows(); ++k) out.push_back(particles.row(k).transpose());
  }
  return out;
}

bool HyperPosteriorApprox::operator==(const HyperPosteriorApprox& o) const {
  auto same = [](const Mat& a, const Mat& b) { return a.rows() == b.rows() && a.cols() == b.cols() && a == b; };
  return method == o.method && same(particles, o.particles) && same(vi_mean, o.vi_mean) &&
         same(vi_log_std, o.vi_log_std);
}

void validate(const MetaTrainConfig& cfg, int num_tasks) {
  if (num_tasks < 1) throw ConfigError("meta_train: need at least one task");
  if (cfg.num_particles < 1) throw ConfigError("meta_train: num_particles must be >= 1");
  if (cfg.num_mll_samples < 1) throw ConfigError("meta_train: num_mll_samples must be >= 1");
  if (cfg.task_batch < 0 || cfg.task_batch > num_tasks) throw ConfigError("meta_train: task_batch must be in [0, n]");
  if (cfg.point_batch < 0) throw ConfigError("meta_train: point_batch must be >= 0");
  if (!(cfg.step_size > 0.0)) throw ConfigError("meta_train: step_size must be positive");
  if (cfg.iterations < 0) throw ConfigError("meta_train: iterations must be >= 0");
  if (!(cfg.hyper_prior_std > 0.0)) throw ConfigError("meta_train: hyper_prior_std must be positive");
  if (!(cfg.vi_tempering > 0.0 && cfg.vi_tempering <= 1.0))
    throw ConfigError("meta_train: vi_tempering must be in (0, 1]");
  if (cfg.vi_samples < 1) throw ConfigError("meta_train: vi_samples must be >= 1");
  if (!(cfg.vi_init_std > 0.0)) throw ConfigError("meta_train: vi_init_std must be positive");
}

double task_weight(const ScoreSettings& s, double beta, Eigen::Index m) {
  if (s.weighting == TaskWeighting::inverse_m_plus_one) return 1.0 / (static_cast<double>(m) + 1.0);
  return s.lambda / (static_cast<double>(s.n) * beta + s.lambda);
}

ValueGrad pacoh_log_score(const MetaModel& model, const Vec& phi, const std::vector<const TaskDataset*>& batch,
                          const std::vector<double>& betas, const DiagonalGaussian& hyper_prior,
                          const ScoreSettings& settings, const RngStream& rng) {
  if (betas.size() != batch.size()) throw LengthMismatch("pacoh_log_score: one beta per task required");
  ValueGrad out;
  if (settings.include_hyper_prior) {
    out.value = gaussian_logpdf(phi, hyper_prior);
    out.grad = gaussian_logpdf_grad(phi, hyper_prior);
  } else {
    out.grad = Vec::Zero(phi.size());
  }
  if (batch.empty()) return out;
  const double scale = static_cast<double>(settings.n) / static_cast<double>(batch.size());
  for (size_t i = 0; i < batch.size(); ++i) {
    const TaskDataset& task = *batch[i];
    double w = scale * task_weight(settings, betas[i], task.size());
    auto lz = model.log_z(phi, task, betas[i], settings.num_mll_samples, rng.fork(static_cast<std::uint64_t>(task.id)),
                          true);
    out.value += w * lz.value;
    out.grad += w * lz.grad;
  }
  return out;
}

double median_bandwidth(const Mat& particles) {
  const Eigen::Index k = particles.rows();
  std::vector<double> d;
  for (Eigen::Index a = 0; a < k; ++a)
    for (Eigen::Index b = a + 1; b < k; ++b) d.push_back((particles.row(a) - particles.row(b)).squaredNorm());
  if (d.empty()) return 1.0;
  auto mid = d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2);
  std::nth_element(d.begin(), mid, d.end());
  double med = *mid;
  if (d.size() % 2 == 0) med = 0.5 * (med + *std::max_element(d.begin(), mid));
  if (!(med > 0.0)) return 1.0;
  return med / (2.0 * std::log(static_cast<double>(k) + 1.0));
}

Mat svgd_direction(const Mat& particles, const Mat& scores, double ell) {
  const Eigen::Index k = particles.rows();
  Mat kern(k, k);
  for (Eigen::Index a = 0; a < k; ++a)
    for (Eigen::Index b = 0; b < k; ++b)
      kern(a, b) = std::exp(-(particles.row(a) - particles.row(b)).squaredNorm() / (2.0 * ell));
  // Row k of the result: sum_k' kern(k', k) score_k' + (phi_k - phi_k') kern(k', k) / ell.
  Mat drive = kern * scores;
  Mat repulse = (kern.rowwise().sum().asDiagonal() * particles - kern * particles) / ell;
  return (drive + repulse) / static_cast<double>(k);
}

Mat svgd_step(const Mat& particles, const Mat& scores, double ell, double eta) {
  return particles + eta * svgd_direction(particles, scores, ell);
}

Mat svgd_step(const Mat& particles, const std::function<Vec(const Vec&)>& score_fn, double bandwidth, double eta) {
  Mat scores(particles.rows(), particles.cols());
  for (Eigen::Index k = 0; k < particles.rows(); ++k) scores.row(k) = score_fn(particles.row(k).transpose()).transpose();
  double ell = bandwidth > 0.0 ? bandwidth : median_bandwidth(particles);
  return svgd_step(particles, scores, ell, eta);
}

void Optimizer::ascend(Mat& params, const Mat& direction) {
  if (kind_ == OptimizerKind::sgd) {
    params += lr_ * direction;
    return;
  }
  constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  if (t_ == 0) {
    m_ = Mat::Zero(params.rows(), params.cols());
    v_ = Mat::Zero(params.rows(), params.cols());
  }
  ++t_;
  m_ = b1 * m_ + (1.0 - b1) * direction;
  v_ = b2 * v_ + (1.0 - b2) * direction.cwiseProduct(direction);
  const double c1 = 1.0 - std::pow(b1, t_);
  const double c2 = 1.0 - std::pow(b2, t_);
  params.array() += lr_ * (m_.array() / c1) / ((v_.array() / c2).sqrt() + eps);
}

std::vector<double> task_betas(const std::vector<TaskDataset>& tasks, LambdaBetaMode mode) {
  std::vector<double> b;
  for (const auto& t : tasks) {
    double m = static_cast<double>(t.size());
    b.push_back(mode == LambdaBetaMode::sqrt ? std::sqrt(m) : m);
  }
  return b;
}

double meta_lambda(int n, LambdaBetaMode mode) {
  return mode == LambdaBetaMode::sqrt ? std::sqrt(static_cast<double>(n)) : static_cast<double>(n);
}

ViResult vi_objective_and_grad(const MetaModel& model, const Vec& mean, const Vec& log_std,
                               const std::vector<const TaskDataset*>& batch, int n, double harmonic_m,
                               const DiagonalGaussian& hyper_prior, double tempering, int num_samples,
                               const RngStream& rng, bool include_hyper_prior) {
  const Eigen::Index d = mean.size();
  if (log_std.size() != d || hyper_prior.dim() != d) throw DimensionMismatch("vi: parameter dimensions");
  const Vec sd = log_std.array().exp().matrix();
  const double data_scale =
      batch.empty() ? 0.0 : static_cast<double>(n) / static_cast<double>(batch.size()) * harmonic_m / (harmonic_m + 1.0);
  ViResult out{0.0, Vec::Zero(2 * d)};
  for (int k = 0; k < num_samples; ++k) {
    RngStream rk = rng.fork(static_cast<std::uint64_t>(k));
    Vec eps = rk.normal_vector(d);
    Vec phi = mean + sd.cwiseProduct(eps);
    double f = 0.0;
    Vec dphi = Vec::Zero(d);
    for (const TaskDataset* task : batch) {
      double m = static_cast<double>(task->size());
      auto lz = model.log_z(phi, *task, m, 1, rk.fork(static_cast<std::uint64_t>(task->id)), true);
      f += data_scale / m * lz.value;
      dphi += (data_scale / m) * lz.grad;
    }
    double log_q = -0.5 * eps.squaredNorm() - log_std.sum() - 0.5 * static_cast<double>(d) * kLog2Pi;
    f -= tempering * log_q;
    if (include_hyper_prior) {
      f += tempering * gaussian_logpdf(phi, hyper_prior);
      dphi += tempering * gaussian_logpdf_grad(phi, hyper_prior);
    }
    out.objective -= f;
    out.grad.head(d) -= dphi;
    out.grad.tail(d) -= dphi.cwiseProduct(sd).cwiseProduct(eps) + Vec::Constant(d, tempering);
  }
  out.objective /= num_samples;
  out.grad /= num_samples;
  return out;
}

MetaTrainResult meta_train(const std::vector<TaskDataset>& tasks, const MetaTrainConfig& cfg, const MetaModel& model) {
  const int n = static_cast<int>(tasks.size());
  validate(cfg, n);
  if (cfg.method == Method::vi && model.kind() == "bnn") throw ConfigError("meta_train: VI is offered for the GP model only");
  const LambdaBetaMode mode = model.kind() == "gp" ? LambdaBetaMode::linear : cfg.mode;
  const std::vector<double> betas_all = task_betas(tasks, mode);

  std::vector<size_t> order(tasks.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) { return tasks[a].id < tasks[b].id; });

  ScoreSettings settings;
  settings.lambda = meta_lambda(n, mode);
  settings.n = n;
  settings.weighting = cfg.weighting;
  settings.include_hyper_prior = !cfg.mll_only;
  settings.num_mll_samples = cfg.num_mll_samples;

  const DiagonalGaussian hyper_prior = DiagonalGaussian::isotropic(model.hyper_prior_center(), cfg.hyper_prior_std);
  const int d = model.dim();
  const RngStream root(cfg.seed, 0);
  const RngStream init = root.fork(kInitLabel);
  const RngStream iters = root.fork(kIterLabel);

  const int nbs = cfg.task_batch == 0 ? n : cfg.task_batch;
  double harmonic_m = 0.0;
  for (const auto& t : tasks) harmonic_m += 1.0 / static_cast<double>(t.size());
  harmonic_m = static_cast<double>(n) / harmonic_m;

  MetaTrainResult result;
  result.approx.method = cfg.method;
  Mat params;
  if (cfg.method == Method::vi) {
    params.resize(2, d);
    params.row(0) = (hyper_prior.mean + cfg.hyper_prior_std * init.fork(0).normal_vector(d)).transpose();
    params.row(1).setConstant(std::log(cfg.vi_init_std));
  } else {
    const int k = cfg.method == Method::map ? 1 : cfg.num_particles;
    params.resize(k, d);
    for (int i = 0; i < k; ++i)
      params.row(i) = (hyper_prior.mean + cfg.hyper_prior_std * init.fork(static_cast<std::uint64_t>(i)).normal_vector(d))
                          .transpose();
  }

  Optimizer opt(cfg.optimizer, cfg.step_size);
  for (int t = 0; t < cfg.iterations; ++t) {
    const RngStream it = iters.fork(static_cast<std::uint64_t>(t));
    std::vector<size_t> chosen = order;
    if (nbs < n) {
      RngStream pick = it.fork(0);
      std::vector<size_t> idx(order.size());
      std::iota(idx.begin(), idx.end(), 0);
      for (int i = 0; i < nbs; ++i) std::swap(idx[i], idx[i + pick.index(static_cast<std::uint64_t>(n - i))]);
      idx.resize(nbs);
      std::sort(idx.begin(), idx.end(), [&](size_t a, size_t b) { return tasks[a].id < tasks[b].id; });
      chosen = idx;
    }
    std::vector<TaskDataset> subsets;
    subsets.reserve(chosen.size());
    std::vector<const TaskDataset*> batch;
    std::vector<double> betas;
    for (size_t i : chosen) {
      const TaskDataset& task = tasks[i];
      if (cfg.point_batch > 0 && cfg.point_batch < task.size()) {
        RngStream pr = it.fork(1).fork(static_cast<std::uint64_t>(task.id));
        std::vector<Eigen::Index> rows(static_cast<size_t>(task.size()));
        std::iota(rows.begin(), rows.end(), 0);
        for (int j = 0; j < cfg.point_batch; ++j)
          std::swap(rows[j], rows[j + pr.index(static_cast<std::uint64_t>(task.size() - j))]);
        rows.resize(cfg.point_batch);
        std::sort(rows.begin(), rows.end());
        subsets.push_back(task.subset(rows));
        batch.push_back(&subsets.back());
      } else {
        batch.push_back(&task);
      }
      betas.push_back(betas_all[i]);
    }

    Mat direction;
    double score = 0.0;
    if (cfg.method == Method::vi) {
      Vec mean = params.row(0).transpose();
      Vec log_std = params.row(1).transpose();
      auto vi = vi_objective_and_grad(model, mean, log_std, batch, n, harmonic_m, hyper_prior, cfg.vi_tempering,
                                      cfg.vi_samples, it.fork(3), !cfg.mll_only);
      direction.resize(2, d);
      direction.row(0) = -vi.grad.head(d).transpose();
      direction.row(1) = -vi.grad.tail(d).transpose();
      score = -vi.objective;
    } else {
      Mat scores(params.rows(), d);
      for (Eigen::Index k = 0; k < params.rows(); ++k) {
        auto s = pacoh_log_score(model, params.row(k).transpose(), batch, betas, hyper_prior, settings,
                                 it.fork(2).fork(static_cast<std::uint64_t>(k)));
        scores.row(k) = s.grad.transpose();
        score += s.value / static_cast<double>(params.rows());
      }
      check_finite(scores, "score gradient");
      double ell = cfg.bandwidth > 0.0 ? cfg.bandwidth : median_bandwidth(params);
      direction = svgd_direction(params, scores, ell);
    }
    if (!std::isfinite(score)) throw DivergenceDetected("meta_train: non-finite score");
    check_finite(direction, "update direction");
    opt.ascend(params, direction);
    check_finite(params, "parameters");
    result.log.push_back({t, score, direction.norm()});
  }

  if (cfg.method == Method::vi) {
    result.approx.vi_mean = params.row(0).transpose();
    result.approx.vi_log_std = params.row(1).transpose();
  } else {
    result.approx.particles = params;
  }
  return result;
}

std::vector<Mat> target_train(const BnnModel& model, const std::vector<Vec>& priors, const TaskDataset& data,
                              double beta, const TargetTrainConfig& cfg, RngStream rng,
                              const std::vector<Mat>* warm_start) {
  if (data.size() == 0) throw EmptyInput("target_train: empty context set");
  if (cfg.num_particles < 1) throw ConfigError("target_train: num_particles must be >= 1");
  if (warm_start && warm_start->size() != priors.size()) throw LengthMismatch("target_train: warm start shape");
  const int hd = model.hyp_dim();
  const int noise = hd - 1;
  std::vector<Mat> out;
  out.reserve(priors.size());
  for (size_t k = 0; k < priors.size(); ++k) {
    const DiagonalGaussian prior = model.prior(priors[k]);
    const Vec sd = prior.std();
    Mat theta(cfg.num_particles, hd);
    if (warm_start) {
      theta = (*warm_start)[k];
    } else {
      RngStream rk = rng.fork(static_cast<std::uint64_t>(k));
      for (int l = 0; l < cfg.num_particles; ++l) {
        Vec eps = rk.fork(static_cast<std::uint64_t>(l)).normal_vector(hd);
        if (!model.learn_noise) eps[noise] = 0.0;
        theta.row(l) = (prior.mean + sd.cwiseProduct(eps)).transpose();
      }
    }
    Optimizer opt(cfg.optimizer, cfg.step_size);
    Mat scores(cfg.num_particles, hd);
    for (int s = 0; s < cfg.steps; ++s) {
      for (int l = 0; l < cfg.num_particles; ++l) {
        Vec h = theta.row(l).transpose();
        Vec g = gaussian_logpdf_grad(h, prior) - beta * empirical_loss(model, h, data.inputs, data.targets).grad;
        if (!model.learn_noise) g[noise] = 0.0;
        scores.row(l) = g.transpose();
      }
      if (!scores.allFinite()) throw DivergenceDetected("target_train: non-finite score");
      double ell = cfg.bandwidth > 0.0 ? cfg.bandwidth : median_bandwidth(theta);
      Mat dir = svgd_direction(theta, scores, ell);
      if (!model.learn_noise) dir.col(noise).setZero();
      opt.ascend(theta, dir);
      if (!theta.allFinite()) throw DivergenceDetected("target_train: non-finite particles");
    }
    out.push_back(std::move(theta));
  }
  return out;
}

}  // namespace pacoh
