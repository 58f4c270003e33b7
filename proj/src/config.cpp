#include "pacoh/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <type_traits>

#include <json.hpp>

namespace pacoh {

using nlohmann::json;

namespace {

// Reads the keys of one JSON object and rejects any it did not consume.
class Section {
 public:
  Section(const json& j, std::string name) : j_(j), name_(std::move(name)) {
    if (!j_.is_object()) throw ConfigError(name_ + ": expected an object");
  }

  // nlohmann converts 2.5 to an int silently.
  template <typename T>
  void check_integral(const json& v, const char* key) const {
    if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
      if (!v.is_number_integer() || (std::is_unsigned_v<T> && !v.is_number_unsigned()))
        throw ConfigError(name_ + "." + key + ": expected an integer");
    } else if constexpr (requires { typename T::value_type; } && !std::is_same_v<T, std::string>) {
      if (!v.is_array()) throw ConfigError(name_ + "." + key + ": expected an array");
      for (const auto& e : v) check_integral<typename T::value_type>(e, key);
    }
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      check_integral<T>(j_.at(key), key);
      out = j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError(name_ + "." + key + ": wrong type");
    }
  }

  bool has(const char* key) const { return j_.contains(key); }

  Section sub(const char* key) {
    seen_.insert(key);
    static const json empty = json::object();
    return Section(j_.contains(key) ? j_.at(key) : empty, name_ + "." + key);
  }

  void finish() const {
    for (const auto& item : j_.items())
      if (!seen_.count(item.key())) throw ConfigError(name_ + ": unknown key '" + item.key() + "'");
  }

 private:
  const json& j_;
  std::string name_;
  std::set<std::string> seen_;
};

LambdaBetaMode mode_from_string(const std::string& s) {
  if (s == "sqrt") return LambdaBetaMode::sqrt;
  if (s == "linear") return LambdaBetaMode::linear;
  throw ConfigError("unknown lambda_beta mode '" + s + "'");
}
std::string to_string(LambdaBetaMode m) { return m == LambdaBetaMode::sqrt ? "sqrt" : "linear"; }

TaskWeighting weighting_from_string(const std::string& s) {
  if (s == "lambda_beta") return TaskWeighting::lambda_beta;
  if (s == "inverse_m_plus_one") return TaskWeighting::inverse_m_plus_one;
  throw ConfigError("unknown weighting '" + s + "'");
}
std::string to_string(TaskWeighting w) {
  return w == TaskWeighting::lambda_beta ? "lambda_beta" : "inverse_m_plus_one";
}

OptimizerKind optimizer_from_string(const std::string& s) {
  if (s == "adam") return OptimizerKind::adam;
  if (s == "sgd") return OptimizerKind::sgd;
  throw ConfigError("unknown optimizer '" + s + "'");
}
std::string to_string(OptimizerKind o) { return o == OptimizerKind::adam ? "adam" : "sgd"; }

ClassifierLoss loss_from_string(const std::string& s) {
  if (s == "zero_one") return ClassifierLoss::zero_one;
  if (s == "logistic") return ClassifierLoss::logistic;
  throw ConfigError("unknown classifier loss '" + s + "'");
}
std::string to_string(ClassifierLoss l) { return l == ClassifierLoss::zero_one ? "zero_one" : "logistic"; }

template <typename E, typename F>
void get_enum(Section& s, const char* key, E& out, F parse) {
  std::string text;
  s.get(key, text);
  if (!text.empty()) out = parse(text);
}

void read_target(Section& s, TargetTrainConfig& t) {
  s.get("particles", t.num_particles);
  s.get("steps", t.steps);
  s.get("step_size", t.step_size);
  s.get("bandwidth", t.bandwidth);
  get_enum(s, "optimizer", t.optimizer, optimizer_from_string);
}

json target_json(const TargetTrainConfig& t) {
  return {{"particles", t.num_particles},
          {"steps", t.steps},
          {"step_size", t.step_size},
          {"bandwidth", t.bandwidth},
          {"optimizer", to_string(t.optimizer)}};
}

}  // namespace

void ExperimentConfig::apply_seed(std::uint64_t s) {
  seed = s;
  meta.seed = s;
}

ExperimentConfig parse_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  ExperimentConfig c;
  Section top(root, "config");
  top.get("seed", c.seed);
  top.get("seeds", c.seeds);

  Section env = top.sub("env");
  env.get("name", c.env.name);
  env.get("n", c.env.n);
  env.get("m", c.env.m);
  env.get("test_tasks", c.env.split.test_tasks);
  env.get("query_points", c.env.split.query_points);
  env.get("train_query_points", c.env.split.train_query_points);
  env.finish();

  Section model = top.sub("model");
  model.get("kind", c.model.kind);
  model.get("hidden", c.model.hidden);
  model.get("feature_dim", c.model.feature_dim);
  model.get("noise_variance", c.model.noise_variance);
  model.get("prior_log_std_center", c.model.prior_log_std_center);
  model.get("learn_noise", c.model.learn_noise);
  model.finish();

  Section mt = top.sub("meta_train");
  get_enum(mt, "method", c.meta.method, method_from_string);
  mt.get("particles", c.meta.num_particles);
  mt.get("mll_samples", c.meta.num_mll_samples);
  mt.get("task_batch", c.meta.task_batch);
  mt.get("point_batch", c.meta.point_batch);
  mt.get("step_size", c.meta.step_size);
  mt.get("iterations", c.meta.iterations);
  get_enum(mt, "lambda_beta", c.meta.mode, mode_from_string);
  get_enum(mt, "weighting", c.meta.weighting, weighting_from_string);
  mt.get("hyper_prior_std", c.meta.hyper_prior_std);
  mt.get("bandwidth", c.meta.bandwidth);
  mt.get("vi_tempering", c.meta.vi_tempering);
  mt.get("vi_samples", c.meta.vi_samples);
  mt.get("vi_init_std", c.meta.vi_init_std);
  get_enum(mt, "optimizer", c.meta.optimizer, optimizer_from_string);
  mt.get("mll_only", c.meta.mll_only);
  mt.finish();

  Section ts = top.sub("meta_test");
  read_target(ts, c.test.target);
  get_enum(ts, "lambda_beta", c.test.mode, mode_from_string);
  ts.get("vi_prior_samples", c.test.vi_prior_samples);
  ts.get("calibration_levels", c.test.calibration.levels);
  ts.get("vanilla", c.vanilla);
  ts.get("checkpoint", c.checkpoint);
  ts.finish();

  Section b = top.sub("bound");
  b.get("env", c.bound_env);
  if (c.bound_env != "blr" && c.bound_env != "logreg") throw ConfigError("bound.env must be blr or logreg");
  std::vector<int> ns;
  b.get("ns", ns);
  if (!ns.empty()) c.blr.ns = c.logreg.ns = ns;
  int m = 0;
  b.get("m", m);
  if (m > 0) c.blr.m = c.logreg.m = m;
  double delta = 0.0;
  b.get("delta", delta);
  if (b.has("delta")) c.blr.delta = c.logreg.delta = delta;
  int mc = 0;
  b.get("mc_priors", mc);
  if (mc > 0) c.blr.mc_priors = c.logreg.mc_priors = mc;
  int tt = 0;
  b.get("test_tasks", tt);
  if (tt > 0) c.blr.test_tasks = c.logreg.test_tasks = tt;
  b.get("hyper_prior_var", c.blr.hyper_prior_var);
  b.get("prior_var", c.blr.prior_var);
  b.get("likelihood_var", c.blr.likelihood_var);
  b.get("prior_std", c.logreg.prior_std);
  b.get("hyper_prior_std", c.logreg.hyper_prior_std);
  get_enum(b, "loss", c.logreg.loss, loss_from_string);
  b.get("draws", c.logreg.draws);
  b.get("test_points", c.logreg.test_points);
  b.get("posterior_draws", c.logreg.posterior_draws);
  b.finish();

  Section bo = top.sub("bo");
  bo.get("rounds", c.bo.bo.rounds);
  bo.get("ucb_beta", c.bo.bo.ucb_beta);
  bo.get("warm_steps", c.bo.bo.warm_steps);
  bo.get("cold_start", c.bo.bo.cold_start);
  bo.get("reward_noise", c.bo.bo.reward_noise);
  bo.get("algorithms", c.bo.algorithms);
  bo.get("pool_seed", c.bo.pool_seed);
  bo.get("pool_size", c.bo.pool.pool_size);
  bo.get("feature_dim", c.bo.pool.feature_dim);
  bo.get("latent_dim", c.bo.pool.latent_dim);
  bo.get("meta_train_tasks", c.bo.pool.meta_train_tasks);
  bo.get("points_per_task", c.bo.pool.points_per_task);
  bo.get("test_tasks", c.bo.pool.test_tasks);
  bo.get("task_spread", c.bo.pool.task_spread);
  bo.finish();
  c.bo.pool.reward_noise = c.bo.bo.reward_noise;

  top.finish();

  if (c.env.n < 1 || c.env.m < 1) throw ConfigError("env: n and m must be >= 1");
  if (c.seeds.empty()) throw ConfigError("seeds: at least one seed required");
  if (c.blr.delta <= 0.0 || c.blr.delta > 1.0) throw ConfigError("bound.delta must lie in (0, 1]");
  c.test.calibration.validate();
  c.apply_seed(c.seed);
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string canonical_config(const ExperimentConfig& c, const std::string& command) {
  json j{{"command", command}, {"seed", c.seed}};
  const bool single = c.meta.method == Method::map || (c.meta.method == Method::svgd && c.meta.num_particles == 1);
  const json env{{"name", c.env.name},
                 {"n", c.env.n},
                 {"m", c.env.m},
                 {"test_tasks", c.env.split.test_tasks},
                 {"query_points", c.env.split.query_points},
                 {"train_query_points", c.env.split.train_query_points}};
  const json model{{"kind", c.model.kind},
                   {"hidden", c.model.hidden},
                   {"feature_dim", c.model.feature_dim},
                   {"noise_variance", c.model.noise_variance},
                   {"prior_log_std_center", c.model.prior_log_std_center},
                   {"learn_noise", c.model.learn_noise}};
  const json meta{{"method", single ? "svgd" : to_string(c.meta.method)},
                  {"particles", single ? 1 : c.meta.num_particles},
                  {"mll_samples", c.meta.num_mll_samples},
                  {"task_batch", c.meta.task_batch},
                  {"point_batch", c.meta.point_batch},
                  {"step_size", c.meta.step_size},
                  {"iterations", c.meta.iterations},
                  {"lambda_beta", to_string(c.meta.mode)},
                  {"weighting", to_string(c.meta.weighting)},
                  {"hyper_prior_std", c.meta.hyper_prior_std},
                  {"bandwidth", c.meta.bandwidth},
                  {"vi_tempering", c.meta.vi_tempering},
                  {"vi_samples", c.meta.vi_samples},
                  {"vi_init_std", c.meta.vi_init_std},
                  {"optimizer", to_string(c.meta.optimizer)},
                  {"mll_only", c.meta.mll_only}};
  json test = target_json(c.test.target);
  test["lambda_beta"] = to_string(c.test.mode);
  test["vi_prior_samples"] = c.test.vi_prior_samples;
  test["calibration_levels"] = c.test.calibration.levels;
  test["vanilla"] = c.vanilla;

  if (command == "bounds") {
    json b{{"env", c.bound_env}};
    if (c.bound_env == "blr") {
      b.update({{"ns", c.blr.ns},
                {"m", c.blr.m},
                {"delta", c.blr.delta},
                {"mc_priors", c.blr.mc_priors},
                {"test_tasks", c.blr.test_tasks},
                {"hyper_prior_var", c.blr.hyper_prior_var},
                {"prior_var", c.blr.prior_var},
                {"likelihood_var", c.blr.likelihood_var}});
    } else {
      b.update({{"ns", c.logreg.ns},
                {"m", c.logreg.m},
                {"delta", c.logreg.delta},
                {"mc_priors", c.logreg.mc_priors},
                {"test_tasks", c.logreg.test_tasks},
                {"prior_std", c.logreg.prior_std},
                {"hyper_prior_std", c.logreg.hyper_prior_std},
                {"loss", to_string(c.logreg.loss)},
                {"draws", c.logreg.draws},
                {"test_points", c.logreg.test_points},
                {"posterior_draws", c.logreg.posterior_draws}});
    }
    j["bound"] = b;
  } else if (command == "meta-train") {
    j.update({{"env", env}, {"model", model}, {"meta_train", meta}});
  } else if (command == "meta-test") {
    j.update({{"seeds", c.seeds}, {"env", env}, {"model", model}, {"meta_train", meta}, {"meta_test", test}});
  } else if (command == "bo") {
    const auto& p = c.bo.pool;
    j.update({{"seeds", c.seeds},
              {"model", model},
              {"meta_train", meta},
              {"meta_test", target_json(c.test.target)},
              {"bo",
               {{"rounds", c.bo.bo.rounds},
                {"ucb_beta", c.bo.bo.ucb_beta},
                {"warm_steps", c.bo.bo.warm_steps},
                {"cold_start", c.bo.bo.cold_start},
                {"reward_noise", c.bo.bo.reward_noise},
                {"algorithms", c.bo.algorithms},
                {"pool_seed", c.bo.pool_seed},
                {"pool_size", p.pool_size},
                {"feature_dim", p.feature_dim},
                {"latent_dim", p.latent_dim},
                {"meta_train_tasks", p.meta_train_tasks},
                {"points_per_task", p.points_per_task},
                {"test_tasks", p.test_tasks},
                {"task_spread", p.task_spread}}}});
  } else {
    throw ConfigError("unknown command '" + command + "'");
  }
  return j.dump();
}

std::string config_hash(const ExperimentConfig& cfg, const std::string& command) {
  // 64-bit FNV-1a.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : canonical_config(cfg, command)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string output_header(const std::string& hash, std::uint64_t seed) {
  return std::string("# ") + kToolVersion + " config_hash=" + hash + " seed=" + std::to_string(seed);
}

}  // namespace pacoh
