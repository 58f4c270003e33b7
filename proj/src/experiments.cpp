#include "pacoh/experiments.hpp"

#include <cmath>
#include <cstdio>

#include "pacoh/predictive.hpp"

namespace pacoh {

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

TransferEstimate mean_and_se(const Vec& v) {
  const double mean = v.mean();
  const double sd = v.size() > 1 ? std::sqrt((v.array() - mean).square().sum() / static_cast<double>(v.size() - 1)) : 0.0;
  return {mean, sd / std::sqrt(static_cast<double>(v.size()))};
}

Eigen::Index pick_weighted(const Vec& weights, double u) {
  const double target = u * weights.sum();
  double acc = 0.0;
  for (Eigen::Index j = 0; j < weights.size(); ++j) {
    acc += weights[j];
    if (target <= acc) return j;
  }
  return weights.size() - 1;
}

BoundSweepRow finish_row(int n, const LogZSample& sample, const BoundTerms& terms) {
  BoundSweepRow row;
  row.n = n;
  row.pacoh = pacoh_bound(sample, terms);
  row.per_task = per_task_bound(sample, terms);
  row.delta = delta_improvement(sample, terms.lambda, terms.beta);
  return row;
}

}  // namespace

std::string bound_sweep_csv_header() {
  return "n,pacoh_bound,pacoh_bound_se,per_task_bound,per_task_bound_se,delta,delta_se,empirical_term,kl_term,"
         "complexity,psi1,psi2,pacoh_test_error,pacoh_test_error_se,per_task_test_error,per_task_test_error_se";
}

std::string bound_sweep_csv_row(const BoundSweepRow& r) {
  return std::to_string(r.n) + ',' + num(r.pacoh.total) + ',' + num(r.pacoh.mc_std_error) + ',' +
         num(r.per_task.total) + ',' + num(r.per_task.mc_std_error) + ',' + num(r.delta.value) + ',' +
         num(r.delta.std_error) + ',' + num(r.pacoh.empirical_term) + ',' + num(r.pacoh.kl_term) + ',' +
         num(r.pacoh.complexity) + ',' + num(r.pacoh.psi1) + ',' + num(r.pacoh.psi2) + ',' +
         num(r.pacoh_test_error.value) + ',' + num(r.pacoh_test_error.std_error) + ',' +
         num(r.per_task_test_error.value) + ',' + num(r.per_task_test_error.std_error);
}

TransferEstimate blr_transfer_error(const std::vector<Vec>& prior_means, const Vec& weights, const BlrEnvConfig& env,
                                    int m, double beta, double prior_var, double likelihood_var, int num_tasks,
                                    RngStream rng) {
  if (prior_means.empty() || static_cast<Eigen::Index>(prior_means.size()) != weights.size())
    throw LengthMismatch("blr_transfer_error: priors and weights");
  if (num_tasks < 1) throw InvalidRange("blr_transfer_error: num_tasks must be >= 1");
  const double sx2 = env.input_std * env.input_std;
  const double seps2 = env.noise_std * env.noise_std;
  Vec errs(num_tasks);
  for (int t = 0; t < num_tasks; ++t) {
    RngStream rt = rng.fork(static_cast<std::uint64_t>(t));
    const Vec w_star = sample_blr_weights(env, rt);
    const TaskDataset task = sample_blr_task(env, w_star, m, t, rt);
    const Eigen::Index j = pick_weighted(weights, rt.uniform());
    const auto q = blr_gibbs_posterior(prior_means[static_cast<size_t>(j)], prior_var, task.inputs, task.targets,
                                       beta, likelihood_var);
    errs[t] = blr_expected_loss(q, w_star, likelihood_var, sx2, seps2);
  }
  return mean_and_se(errs);
}

std::vector<BoundSweepRow> blr_bound_sweep(const BlrBoundSweepConfig& cfg, std::uint64_t seed) {
  if (cfg.hyper_prior_var < 0.0 || cfg.prior_var <= 0.0 || cfg.likelihood_var <= 0.0)
    throw ConfigError("bounds: variances must be positive");
  const RngStream root(seed, 21);
  const double beta = std::sqrt(static_cast<double>(cfg.m));
  const double sx2 = cfg.env.input_std * cfg.env.input_std;
  const double seps2 = cfg.env.noise_std * cfg.env.noise_std;
  const double hp_std = std::sqrt(cfg.hyper_prior_var);
  const auto hyper_prior = DiagonalGaussian::isotropic(Vec::Zero(cfg.env.d), hp_std);
  const LogZFn log_z = [&](const Vec& prior, const TaskDataset& task, RngStream&) {
    return blr_log_z(prior, cfg.prior_var, task.inputs, task.targets, beta, cfg.likelihood_var);
  };
  std::vector<BoundSweepRow> rows;
  for (int n : cfg.ns) {
    if (n < 1) throw ConfigError("bounds: n must be >= 1");
    const RngStream rn = root.fork(static_cast<std::uint64_t>(n));
    std::vector<TaskDataset> tasks;
    double psi1 = 0.0;
    for (int i = 0; i < n; ++i) {
      RngStream ri = rn.fork(0).fork(static_cast<std::uint64_t>(i));
      const Vec w = sample_blr_weights(cfg.env, ri);
      tasks.push_back(sample_blr_task(cfg.env, w, cfg.m, i, ri));
      psi1 += blr_cgf_constants(w, cfg.likelihood_var, sx2, cfg.prior_var, cfg.hyper_prior_var, seps2, cfg.env.d,
                                beta / cfg.m)
                  .psi1_term;
    }
    psi1 /= n;
    const Vec task_mean = Vec::Constant(cfg.env.d, cfg.env.task_mean);
    const double psi2 = blr_cgf2_constants(task_mean, cfg.env.task_std * cfg.env.task_std, cfg.hyper_prior_var, sx2,
                                           cfg.likelihood_var, cfg.env.d, n)
                            .psi2_term;
    const double lambda = std::sqrt(static_cast<double>(n));
    BoundTerms terms{n, cfg.m, lambda, beta, cfg.delta,
                     psi1 + psi2 + std::log(1.0 / cfg.delta) / std::sqrt(static_cast<double>(n)), psi1, psi2};
    const LogZSample sample = sample_log_z(tasks, hyper_prior, log_z, cfg.mc_priors, rn.fork(1));
    BoundSweepRow row = finish_row(n, sample, terms);
    const Vec uniform = Vec::Ones(static_cast<Eigen::Index>(sample.priors.size()));
    row.pacoh_test_error = blr_transfer_error(sample.priors, pacoh_weights(sample, lambda, beta), cfg.env, cfg.m,
                                              beta, cfg.prior_var, cfg.likelihood_var, cfg.test_tasks, rn.fork(2));
    row.per_task_test_error = blr_transfer_error(sample.priors, uniform, cfg.env, cfg.m, beta, cfg.prior_var,
                                                 cfg.likelihood_var, cfg.test_tasks, rn.fork(2));
    rows.push_back(row);
  }
  return rows;
}

std::vector<BoundSweepRow> logreg_bound_sweep(const LogregBoundSweepConfig& cfg, std::uint64_t seed) {
  if (cfg.prior_std <= 0.0 || cfg.hyper_prior_std < 0.0) throw ConfigError("bounds: std must be positive");
  const RngStream root(seed, 22);
  const double beta = std::sqrt(static_cast<double>(cfg.m));
  const auto hyper_prior = DiagonalGaussian::isotropic(Vec::Zero(cfg.env.d), cfg.hyper_prior_std);
  const LogZFn log_z = [&](const Vec& prior, const TaskDataset& task, RngStream& rng) {
    return classifier_log_z(prior, cfg.prior_std, task, beta, cfg.loss, cfg.draws, rng);
  };
  std::vector<BoundSweepRow> rows;
  for (int n : cfg.ns) {
    if (n < 1) throw ConfigError("bounds: n must be >= 1");
    const RngStream rn = root.fork(static_cast<std::uint64_t>(n));
    std::vector<TaskDataset> tasks;
    for (int i = 0; i < n; ++i) {
      RngStream ri = rn.fork(0).fork(static_cast<std::uint64_t>(i));
      const Vec w = sample_logreg_weights(cfg.env, ri);
      tasks.push_back(sample_logreg_task(cfg.env, w, cfg.m, i, ri));
    }
    const double lambda = std::sqrt(static_cast<double>(n));
    BoundTerms terms{n, cfg.m, lambda, beta, cfg.delta, complexity_bounded(n, cfg.m, lambda, beta, cfg.delta)};
    const LogZSample sample = sample_log_z(tasks, hyper_prior, log_z, cfg.mc_priors, rn.fork(1));
    BoundSweepRow row = finish_row(n, sample, terms);
    const Vec uniform = Vec::Ones(static_cast<Eigen::Index>(sample.priors.size()));
    row.pacoh_test_error =
        misclassification_transfer_error(sample.priors, pacoh_weights(sample, lambda, beta), cfg.prior_std, cfg.env,
                                         cfg.m, beta, cfg.test_tasks, cfg.test_points, cfg.posterior_draws, rn.fork(2));
    row.per_task_test_error =
        misclassification_transfer_error(sample.priors, uniform, cfg.prior_std, cfg.env, cfg.m, beta, cfg.test_tasks,
                                         cfg.test_points, cfg.posterior_draws, rn.fork(2));
    rows.push_back(row);
  }
  return rows;
}

MetaDataset make_env(const EnvConfig& cfg, std::uint64_t seed) {
  if (cfg.name == "sinusoid") return gen_sinusoid_env(cfg.n, cfg.m, seed, cfg.split);
  if (cfg.name == "cauchy") return gen_cauchy_env(cfg.n, cfg.m, seed, cfg.split);
  if (cfg.name == "logreg") return gen_logreg_env(cfg.n, cfg.m, seed, {}, cfg.split);
  if (cfg.name == "blr") return gen_blr_env(cfg.n, cfg.m, seed, {}, cfg.split);
  throw ConfigError("unknown environment '" + cfg.name + "'");
}

ModelDescriptor describe_model(const ModelConfig& cfg, int input_dim, int num_classes) {
  ModelDescriptor d;
  d.kind = cfg.kind;
  if (cfg.kind == "gp") {
    if (num_classes > 0) throw ConfigError("the GP model supports regression only");
    d.gp = GpModel::make(input_dim, cfg.hidden, cfg.feature_dim, cfg.noise_variance);
  } else if (cfg.kind == "bnn") {
    d.bnn.arch = MlpArchitecture{input_dim, cfg.hidden, num_classes > 0 ? num_classes : 1};
    d.bnn.arch.validate();
    d.bnn.likelihood = num_classes > 0 ? Likelihood::classification : Likelihood::regression;
    d.bnn.learn_noise = cfg.learn_noise && num_classes == 0;
    d.prior_log_std_center = cfg.prior_log_std_center;
  } else {
    throw ConfigError("unknown model kind '" + cfg.kind + "'");
  }
  return d;
}

std::vector<Vec> vanilla_priors(const ModelDescriptor& model) { return {model.build()->hyper_prior_center()}; }

std::vector<TestTask> meta_train_eval_tasks(const MetaDataset& ds) {
  if (ds.train_tasks.size() != ds.train_queries.size())
    throw LengthMismatch("meta_train_eval_tasks: tasks and queries differ in count");
  std::vector<TestTask> out;
  for (size_t i = 0; i < ds.train_tasks.size(); ++i) out.push_back({ds.train_tasks[i], ds.train_queries[i]});
  return out;
}

MetricSummary evaluate_priors(const ModelDescriptor& model, const std::vector<Vec>& priors,
                              const std::vector<TestTask>& tasks, const MetaTestConfig& cfg, RngStream rng) {
  if (tasks.empty()) throw EmptyInput("evaluate_priors: no tasks");
  MetricSummary out;
  out.mean.task = -1;
  for (const auto& task : tasks) {
    TaskMetrics tm;
    tm.task = task.context.id;
    const Mat& xq = task.query.inputs;
    const Vec& yq = task.query.targets;
    if (model.kind == "gp") {
      const auto pred = gp_mixture_predict(model.gp, priors, task.context, xq);
      Vec mean(yq.size());
      for (Eigen::Index j = 0; j < yq.size(); ++j) mean[j] = pred[static_cast<size_t>(j)].mean();
      tm.rmse = rmse(mean, yq);
      tm.calib_err = regression_calibration_error(pred, yq, cfg.calibration);
    } else {
      const double m = static_cast<double>(task.context.size());
      const double beta = cfg.mode == LambdaBetaMode::linear ? m : std::sqrt(m);
      const auto particles = target_train(model.bnn, priors, task.context, beta, cfg.target,
                                          rng.fork(static_cast<std::uint64_t>(task.context.id)));
      if (model.bnn.likelihood == Likelihood::regression) {
        const auto pred = bnn_mixture_predict(model.bnn, particles, xq);
        Vec mean(yq.size());
        for (Eigen::Index j = 0; j < yq.size(); ++j) mean[j] = pred[static_cast<size_t>(j)].mean();
        tm.rmse = rmse(mean, yq);
        tm.calib_err = regression_calibration_error(pred, yq, cfg.calibration);
      } else {
        const Mat p = bnn_class_probabilities(model.bnn, particles, xq);
        Vec conf(yq.size());
        std::vector<int> predicted, labels;
        int hits = 0;
        for (Eigen::Index j = 0; j < yq.size(); ++j) {
          Eigen::Index k = 0;
          conf[j] = p.row(j).maxCoeff(&k);
          predicted.push_back(static_cast<int>(k));
          labels.push_back(static_cast<int>(yq[j]));
          hits += predicted.back() == labels.back();
        }
        tm.accuracy = static_cast<double>(hits) / static_cast<double>(yq.size());
        tm.ece = ece(conf, predicted, labels, cfg.calibration);
      }
    }
    out.tasks.push_back(tm);
  }
  const double count = static_cast<double>(out.tasks.size());
  for (const auto& t : out.tasks) {
    out.mean.rmse += t.rmse / count;
    out.mean.calib_err += t.calib_err / count;
    out.mean.accuracy += t.accuracy / count;
    out.mean.ece += t.ece / count;
  }
  return out;
}

RegressionRun run_meta_learning(const MetaDataset& ds, const ModelDescriptor& model, const MetaTrainConfig& meta,
                                const MetaTestConfig& test, bool vanilla) {
  std::vector<Vec> priors;
  if (vanilla) {
    priors = vanilla_priors(model);
  } else {
    const auto mm = model.build();
    const auto result = meta_train(ds.train_tasks, meta, *mm);
    priors = result.approx.priors(test.vi_prior_samples, RngStream(meta.seed, 31));
  }
  const RngStream rng(meta.seed, 32);
  return {evaluate_priors(model, priors, ds.test_tasks, test, rng.fork(0)),
          evaluate_priors(model, priors, meta_train_eval_tasks(ds), test, rng.fork(1))};
}

std::string bo_csv_header() { return "algorithm,seed,task,t,action,reward,avg_regret,simple_regret"; }

std::string bo_csv_row(const BoRoundRow& r) {
  return r.algorithm + ',' + std::to_string(r.seed) + ',' + std::to_string(r.task) + ',' + std::to_string(r.t) + ',' +
         std::to_string(r.action) + ',' + num(r.reward) + ',' + num(r.avg_regret) + ',' + num(r.simple_regret);
}

std::vector<BoRoundRow> run_bo_experiment(const BoExperimentConfig& cfg, const PeptideEnv& env,
                                          const ModelDescriptor& model, const HyperPosteriorApprox* approx,
                                          const std::vector<std::uint64_t>& seeds) {
  if (model.kind != "bnn") throw ConfigError("bo: the model must be a BNN");
  const int test_tasks = static_cast<int>(env.pool.task_rewards.size()) - env.first_test_task;
  if (test_tasks < 1) throw ConfigError("bo: the pool has no test tasks");
  std::vector<BoRoundRow> rows;
  for (const auto& name : cfg.algorithms) {
    const auto dash = name.find('-');
    if (dash == std::string::npos) throw ConfigError("bo: algorithm must look like 'pacoh-ucb'");
    const std::string source = name.substr(0, dash);
    BoConfig bc = cfg.bo;
    bc.acquisition = acquisition_from_string(name.substr(dash + 1));
    std::vector<Vec> priors;
    if (source == "pacoh") {
      if (!approx) throw ConfigError("bo: '" + name + "' needs a meta-trained checkpoint");
      priors = approx->priors(1, RngStream(0, 0));
    } else if (source == "vanilla") {
      priors = vanilla_priors(model);
    } else {
      throw ConfigError("bo: unknown prior source '" + source + "'");
    }
    for (std::uint64_t seed : seeds) {
      const int task = env.first_test_task + static_cast<int>(seed % static_cast<std::uint64_t>(test_tasks));
      const BoHistory hist = run_bo(model.bnn, env.pool, task, priors, bc, RngStream(seed, 41));
      const Vec& reward = env.pool.task_rewards[static_cast<size_t>(task)];
      const double best = reward[env.pool.optimum[static_cast<size_t>(task)]];
      const Vec r = Eigen::Map<const Vec>(hist.rewards.data(), static_cast<Eigen::Index>(hist.rewards.size()));
      const RegretCurves rc = regret_curves(r, best);
      for (size_t t = 0; t < hist.actions.size(); ++t)
        rows.push_back({name, seed, task, static_cast<int>(t), hist.actions[t], hist.rewards[t],
                        rc.average[static_cast<Eigen::Index>(t)], rc.simple[static_cast<Eigen::Index>(t)]});
    }
  }
  return rows;
}

}  // namespace pacoh
