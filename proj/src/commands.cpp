#include "pacoh/commands.hpp"

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>

#include "pacoh/config.hpp"

namespace pacoh {

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

class CsvFile {
 public:
  CsvFile(const std::filesystem::path& path, const std::string& comment, const std::string& header)
      : out_(path, std::ios::binary) {
    if (!out_) throw ConfigError("cannot write '" + path.string() + "'");
    out_ << comment << '\n' << header << '\n';
  }
  void row(const std::string& line) { out_ << line << '\n'; }

 private:
  std::ofstream out_;
};

std::string metrics_row(std::uint64_t seed, const char* split, const TaskMetrics& m) {
  return std::to_string(seed) + ',' + split + ',' + std::to_string(m.task) + ',' + num(m.rmse) + ',' +
         num(m.calib_err) + ',' + num(m.accuracy) + ',' + num(m.ece);
}

int cmd_bounds(const ExperimentConfig& cfg, const std::string& hash, const std::filesystem::path& out) {
  const auto rows = cfg.bound_env == "blr" ? blr_bound_sweep(cfg.blr, cfg.seed) : logreg_bound_sweep(cfg.logreg, cfg.seed);
  CsvFile csv(out / "bounds.csv", output_header(hash, cfg.seed), bound_sweep_csv_header());
  for (const auto& r : rows) {
    spdlog::info("bounds n={} pacoh={:.4f} per_task={:.4f} delta={:.4f}", r.n, r.pacoh.total, r.per_task.total,
                 r.delta.value);
    csv.row(bound_sweep_csv_row(r));
  }
  return kExitOk;
}

int cmd_meta_train(const ExperimentConfig& cfg, const std::string& hash, const std::filesystem::path& out) {
  const MetaDataset ds = make_env(cfg.env, cfg.seed);
  const int classes = ds.env == "logreg" ? 2 : 0;
  Checkpoint ckpt;
  ckpt.model = describe_model(cfg.model, static_cast<int>(ds.train_tasks.front().dim()), classes);
  ckpt.config_hash = hash;
  ckpt.seed = cfg.seed;
  const auto model = ckpt.model.build();
  spdlog::info("meta-train {} {} on {} tasks, {} iterations", ckpt.model.kind, to_string(cfg.meta.method),
               ds.train_tasks.size(), cfg.meta.iterations);
  const MetaTrainResult result = meta_train(ds.train_tasks, cfg.meta, *model);
  ckpt.approx = result.approx;
  save_checkpoint((out / "checkpoint.json").string(), ckpt);
  CsvFile log(out / "train_log.csv", output_header(hash, cfg.seed), "iteration,score,grad_norm");
  for (const auto& r : result.log) log.row(std::to_string(r.iteration) + ',' + num(r.score) + ',' + num(r.grad_norm));
  return kExitOk;
}

int cmd_meta_test(const ExperimentConfig& cfg, const std::string& hash, const std::filesystem::path& out) {
  std::optional<Checkpoint> ckpt;
  if (!cfg.checkpoint.empty()) ckpt = load_checkpoint(cfg.checkpoint);
  CsvFile csv(out / "metrics.csv", output_header(hash, cfg.seed), "seed,split,task,rmse,calib_err,accuracy,ece");
  std::map<std::string, std::vector<double>> per_seed;
  for (std::uint64_t seed : cfg.seeds) {
    const MetaDataset ds = make_env(cfg.env, seed);
    const int classes = ds.env == "logreg" ? 2 : 0;
    const ModelDescriptor desc =
        ckpt ? ckpt->model : describe_model(cfg.model, static_cast<int>(ds.train_tasks.front().dim()), classes);
    RegressionRun run;
    if (ckpt) {
      const auto priors = ckpt->approx.priors(cfg.test.vi_prior_samples, RngStream(seed, 31));
      const RngStream rng(seed, 32);
      run.test = evaluate_priors(desc, priors, ds.test_tasks, cfg.test, rng.fork(0));
      run.train = evaluate_priors(desc, priors, meta_train_eval_tasks(ds), cfg.test, rng.fork(1));
    } else {
      MetaTrainConfig meta = cfg.meta;
      meta.seed = seed;
      run = run_meta_learning(ds, desc, meta, cfg.test, cfg.vanilla);
    }
    spdlog::info("meta-test seed={} rmse={:.4f} calib_err={:.4f}", seed, run.test.mean.rmse, run.test.mean.calib_err);
    for (const auto& t : run.test.tasks) csv.row(metrics_row(seed, "test", t));
    for (const auto& t : run.train.tasks) csv.row(metrics_row(seed, "train", t));
    per_seed["test_rmse"].push_back(run.test.mean.rmse);
    per_seed["test_calib_err"].push_back(run.test.mean.calib_err);
    per_seed["test_accuracy"].push_back(run.test.mean.accuracy);
    per_seed["test_ece"].push_back(run.test.mean.ece);
    per_seed["train_rmse"].push_back(run.train.mean.rmse);
  }
  CsvFile summary(out / "summary.csv", output_header(hash, cfg.seed), "metric,mean,std,seeds");
  for (const auto& [name, v] : per_seed) {
    double mean = 0.0, var = 0.0;
    for (double x : v) mean += x / static_cast<double>(v.size());
    for (double x : v) var += (x - mean) * (x - mean) / static_cast<double>(v.size());
    summary.row(name + ',' + num(mean) + ',' + num(std::sqrt(var)) + ',' + std::to_string(v.size()));
  }
  return kExitOk;
}

int cmd_bo(const ExperimentConfig& cfg, const std::string& hash, const std::filesystem::path& out) {
  const PeptideEnv env = gen_peptide_pool(cfg.bo.pool_seed, cfg.bo.pool);
  ModelConfig mc = cfg.model;
  mc.kind = "bnn";
  ModelDescriptor desc = describe_model(mc, static_cast<int>(env.pool.candidates.cols()), 0);
  std::optional<HyperPosteriorApprox> approx;
  bool needs_prior = false;
  for (const auto& a : cfg.bo.algorithms) needs_prior |= a.rfind("pacoh", 0) == 0;
  if (!cfg.checkpoint.empty()) {
    const Checkpoint ckpt = load_checkpoint(cfg.checkpoint);
    desc = ckpt.model;
    approx = ckpt.approx;
  } else if (needs_prior) {
    spdlog::info("bo: meta-training on {} pool tasks", env.meta_train.size());
    approx = meta_train(env.meta_train, cfg.meta, *desc.build()).approx;
  }
  BoExperimentConfig bc = cfg.bo;
  bc.bo.target = cfg.test.target;
  const auto rows = run_bo_experiment(bc, env, desc, approx ? &*approx : nullptr, cfg.seeds);
  CsvFile csv(out / "bo.csv", output_header(hash, cfg.seed), bo_csv_header());
  for (const auto& r : rows) csv.row(bo_csv_row(r));
  return kExitOk;
}

}  // namespace

void configure_logging() {
  auto logger = spdlog::stderr_color_mt("pacoh_lab");
  spdlog::set_default_logger(logger);
  const char* level = std::getenv("PACOH_LAB_LOG");
  const std::string l = level ? level : "info";
  if (l == "error")
    spdlog::set_level(spdlog::level::err);
  else if (l == "debug")
    spdlog::set_level(spdlog::level::debug);
  else
    spdlog::set_level(spdlog::level::info);
}

int run_command(const CliOptions& opts) {
  try {
    if (opts.threads < 1) throw ConfigError("--threads must be >= 1");
    Eigen::setNbThreads(opts.threads);
    ExperimentConfig cfg = load_config(opts.config_path);
    if (opts.seed) cfg.apply_seed(*opts.seed);
    if (opts.mll_only) cfg.meta.mll_only = true;
    const std::string hash = config_hash(cfg, opts.command);
    const std::filesystem::path out(opts.out_dir);
    std::filesystem::create_directories(out);
    if (opts.command == "bounds") return cmd_bounds(cfg, hash, out);
    if (opts.command == "meta-train") return cmd_meta_train(cfg, hash, out);
    if (opts.command == "meta-test") return cmd_meta_test(cfg, hash, out);
    if (opts.command == "bo") return cmd_bo(cfg, hash, out);
    throw ConfigError("unknown command '" + opts.command + "'");
  } catch (const NumericalError& e) {
    spdlog::error("numerical failure: {}", e.what());
    return kExitNumerical;
  } catch (const Error& e) {
    spdlog::error("{}", e.what());
    return kExitConfig;
  } catch (const std::filesystem::filesystem_error& e) {
    spdlog::error("{}", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    spdlog::error("numerical failure: {}", e.what());
    return kExitNumerical;
  }
}

}  // namespace pacoh
