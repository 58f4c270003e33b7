#include "pacoh/environments.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace pacoh {

using nlohmann::json;

namespace {

constexpr int kSchemaVersion = 1;
constexpr std::uint64_t kTrainLabel = 0;
constexpr std::uint64_t kTestLabel = 1;

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Builds a meta-dataset from a per-task sampler taking (id, m, rng) and
// returning a task with m + extra points; the first m rows form the context.
template <typename Sampler>
MetaDataset assemble(const std::string& env, int n, int m, std::uint64_t seed, std::uint64_t env_id,
                     const SplitConfig& split, Sampler sample) {
  if (n < 1 || m < 1) throw InvalidRange(env + ": n and m must be >= 1");
  MetaDataset ds;
  ds.env = env;
  ds.seed = seed;
  const RngStream root(seed, env_id);
  auto split_rows = [](const TaskDataset& full, int from, int count) {
    std::vector<Eigen::Index> rows;
    for (int r = from; r < from + count; ++r) rows.push_back(r);
    return full.subset(rows);
  };
  for (int i = 0; i < n; ++i) {
    RngStream rng = root.fork(kTrainLabel).fork(static_cast<std::uint64_t>(i));
    TaskDataset full = sample(i, m + split.train_query_points, rng);
    ds.train_tasks.push_back(split_rows(full, 0, m));
    ds.train_queries.push_back(split_rows(full, m, split.train_query_points));
  }
  for (int j = 0; j < split.test_tasks; ++j) {
    RngStream rng = root.fork(kTestLabel).fork(static_cast<std::uint64_t>(j));
    TaskDataset full = sample(n + j, m + split.query_points, rng);
    ds.test_tasks.push_back({split_rows(full, 0, m), split_rows(full, m, split.query_points)});
  }
  return ds;
}

json matrix_to_json(const Mat& m) {
  std::vector<double> data;
  data.reserve(static_cast<size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

Mat matrix_from_json(const json& j) {
  Eigen::Index rows = j.at("rows").get<Eigen::Index>();
  Eigen::Index cols = j.at("cols").get<Eigen::Index>();
  auto data = j.at("data").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(data.size()) != rows * cols) throw InvalidRange("json: matrix size mismatch");
  Mat m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = data[static_cast<size_t>(r * cols + c)];
  return m;
}

json vec_to_json(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Vec vec_from_json(const json& j) {
  auto d = j.get<std::vector<double>>();
  return Eigen::Map<const Vec>(d.data(), static_cast<Eigen::Index>(d.size()));
}

json task_to_json(const TaskDataset& t) {
  return {{"id", t.id},
          {"inputs", matrix_to_json(t.inputs)},
          {"targets", vec_to_json(t.targets)},
          {"true_params", vec_to_json(t.true_params)}};
}

TaskDataset task_from_json(const json& j) {
  TaskDataset t;
  t.id = j.at("id").get<int>();
  t.inputs = matrix_from_json(j.at("inputs"));
  t.targets = vec_from_json(j.at("targets"));
  t.true_params = vec_from_json(j.at("true_params"));
  return t;
}

void check_schema(const json& j) {
  if (j.at("schema_version").get<int>() != kSchemaVersion) throw InvalidRange("json: unsupported schema version");
}

}  // namespace

TaskDataset TaskDataset::subset(const std::vector<Eigen::Index>& rows) const {
  TaskDataset t;
  t.id = id;
  t.true_params = true_params;
  t.inputs.resize(static_cast<Eigen::Index>(rows.size()), inputs.cols());
  t.targets.resize(static_cast<Eigen::Index>(rows.size()));
  for (size_t r = 0; r < rows.size(); ++r) {
    t.inputs.row(static_cast<Eigen::Index>(r)) = inputs.row(rows[r]);
    t.targets[static_cast<Eigen::Index>(r)] = targets[rows[r]];
  }
  return t;
}

double sinusoid_value(const SinusoidParams& p, double x) {
  return p.slope * x + p.amplitude * std::sin(1.5 * (x - p.phase)) + p.offset;
}

SinusoidParams sample_sinusoid_params(RngStream& rng) {
  SinusoidParams p;
  p.amplitude = rng.uniform(0.7, 1.3);
  p.phase = rng.normal(0.0, 0.1);
  p.offset = rng.normal(5.0, 0.1);
  p.slope = rng.normal(0.5, 0.2);
  return p;
}

MetaDataset gen_sinusoid_env(int n, int m, std::uint64_t seed, const SplitConfig& split) {
  return assemble("sinusoid", n, m, seed, 11, split, [](int id, int count, RngStream& rng) {
    SinusoidParams p = sample_sinusoid_params(rng);
    TaskDataset t;
    t.id = id;
    t.true_params = Vec{{p.amplitude, p.phase, p.offset, p.slope}};
    t.inputs.resize(count, 1);
    t.targets.resize(count);
    for (int j = 0; j < count; ++j) {
      double x = rng.uniform(-5.0, 5.0);
      t.inputs(j, 0) = x;
      t.targets[j] = sinusoid_value(p, x) + 0.1 * rng.normal();
    }
    return t;
  });
}

double cauchy_mean(const Vec& x) {
  Vec mu1 = Vec::Constant(x.size(), -1.0);
  Vec mu2 = Vec::Constant(x.size(), 2.0);
  return 6.0 / (std::numbers::pi * (1.0 + (x - mu1).squaredNorm())) +
         3.0 / (std::numbers::pi * (1.0 + (x - mu2).squaredNorm()));
}

MetaDataset gen_cauchy_env(int n, int m, std::uint64_t seed, const SplitConfig& split, const CauchyEnvConfig& cfg) {
  return assemble("cauchy", n, m, seed, 12, split, [cfg](int id, int count, RngStream& rng) {
    const int d = 2;
    TaskDataset t;
    t.id = id;
    t.inputs.resize(count, d);
    for (int j = 0; j < count; ++j)
      for (int c = 0; c < d; ++c) t.inputs(j, c) = std::clamp(rng.normal(0.0, 2.5), -3.0, 2.0);
    Vec g = Vec::Zero(count);
    if (cfg.gp_variance > 0.0) {
      Mat k(count, count);
      for (int a = 0; a < count; ++a)
        for (int b = 0; b < count; ++b)
          k(a, b) = cfg.gp_variance *
                    std::exp(-(t.inputs.row(a) - t.inputs.row(b)).squaredNorm() / (2.0 * cfg.gp_lengthscale));
      SpdFactor chol(k);
      g = chol.lower() * rng.normal_vector(count);
    }
    t.targets.resize(count);
    for (int j = 0; j < count; ++j)
      t.targets[j] = cauchy_mean(t.inputs.row(j).transpose()) + g[j] + cfg.noise_std * rng.normal();
    return t;
  });
}

Vec sample_blr_weights(const BlrEnvConfig& cfg, RngStream& rng) {
  Vec w(cfg.d);
  for (int i = 0; i < cfg.d; ++i) w[i] = cfg.task_mean + cfg.task_std * rng.normal();
  return w;
}

TaskDataset sample_blr_task(const BlrEnvConfig& cfg, const Vec& w_star, int m, int id, RngStream& rng) {
  TaskDataset t;
  t.id = id;
  t.true_params = w_star;
  t.inputs.resize(m, cfg.d);
  t.targets.resize(m);
  for (int j = 0; j < m; ++j) {
    for (int c = 0; c < cfg.d; ++c) t.inputs(j, c) = cfg.input_std * rng.normal();
    t.targets[j] = t.inputs.row(j).dot(w_star) + cfg.noise_std * rng.normal();
  }
  return t;
}

MetaDataset gen_blr_env(int n, int m, std::uint64_t seed, const BlrEnvConfig& cfg, const SplitConfig& split) {
  return assemble("blr", n, m, seed, 13, split, [cfg](int id, int count, RngStream& rng) {
    Vec w = sample_blr_weights(cfg, rng);
    return sample_blr_task(cfg, w, count, id, rng);
  });
}

Vec sample_logreg_weights(const LogregEnvConfig& cfg, RngStream& rng) {
  Vec w(cfg.d);
  for (int i = 0; i < cfg.d; ++i) w[i] = cfg.task_mean + cfg.task_std * rng.normal();
  return w;
}

Mat sample_logreg_inputs(int m, int d, RngStream& rng) {
  Mat x(m, d);
  for (int j = 0; j < m; ++j)
    for (int c = 0; c < d; ++c) x(j, c) = rng.uniform(-1.0, 1.0);
  return x;
}

TaskDataset sample_logreg_task(const LogregEnvConfig& cfg, const Vec& w_star, int m, int id, RngStream& rng) {
  TaskDataset t;
  t.id = id;
  t.true_params = w_star;
  t.inputs = sample_logreg_inputs(m, cfg.d, rng);
  t.targets.resize(m);
  for (int j = 0; j < m; ++j) t.targets[j] = rng.uniform() < sigmoid(t.inputs.row(j).dot(w_star)) ? 1.0 : 0.0;
  return t;
}

MetaDataset gen_logreg_env(int n, int m, std::uint64_t seed, const LogregEnvConfig& cfg, const SplitConfig& split) {
  return assemble("logreg", n, m, seed, 14, split, [cfg](int id, int count, RngStream& rng) {
    Vec w = sample_logreg_weights(cfg, rng);
    return sample_logreg_task(cfg, w, count, id, rng);
  });
}

PeptideEnv gen_peptide_pool(std::uint64_t seed, const PeptidePoolConfig& cfg) {
  const RngStream root(seed, 15);
  RngStream rng = root.fork(0);
  const int n = cfg.pool_size, f = cfg.feature_dim, k = cfg.latent_dim;
  Mat z(n, k), load(k, f);
  for (int i = 0; i < n; ++i)
    for (int c = 0; c < k; ++c) z(i, c) = rng.normal();
  for (int c = 0; c < k; ++c)
    for (int j = 0; j < f; ++j) load(c, j) = rng.normal() / std::sqrt(static_cast<double>(k));
  Mat feat = z * load;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < f; ++j) feat(i, j) += 0.3 * rng.normal();
  Vec mu = feat.colwise().mean().transpose();
  feat.rowwise() -= mu.transpose();
  Vec sd = (feat.colwise().squaredNorm() / static_cast<double>(n)).cwiseSqrt().transpose();
  for (int j = 0; j < f; ++j) feat.col(j) /= sd[j];

  // Task weights live in the latent space so rewards share structure.
  Vec shared = rng.normal_vector(k);
  PeptideEnv env;
  env.pool.candidates = feat;
  Mat proj = feat * load.transpose() / static_cast<double>(f);
  const int total = cfg.meta_train_tasks + cfg.test_tasks;
  for (int t = 0; t < total; ++t) {
    RngStream tr = root.fork(1).fork(static_cast<std::uint64_t>(t));
    Vec w = shared + cfg.task_spread * tr.normal_vector(k);
    Vec r = proj * w;
    r = (r.array() - r.mean()) / std::sqrt((r.array() - r.mean()).square().mean());
    Eigen::Index best;
    r.maxCoeff(&best);
    env.pool.task_rewards.push_back(r);
    env.pool.optimum.push_back(static_cast<int>(best));
  }
  for (int t = 0; t < cfg.meta_train_tasks; ++t) {
    RngStream pr = root.fork(2).fork(static_cast<std::uint64_t>(t));
    TaskDataset d;
    d.id = t;
    d.inputs.resize(cfg.points_per_task, f);
    d.targets.resize(cfg.points_per_task);
    for (int j = 0; j < cfg.points_per_task; ++j) {
      auto a = static_cast<Eigen::Index>(pr.index(static_cast<std::uint64_t>(n)));
      d.inputs.row(j) = feat.row(a);
      d.targets[j] = env.pool.task_rewards[t][a] + cfg.reward_noise * pr.normal();
    }
    env.meta_train.push_back(std::move(d));
  }
  env.first_test_task = cfg.meta_train_tasks;
  return env;
}

std::string to_json(const MetaDataset& ds) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["env"] = ds.env;
  j["seed"] = ds.seed;
  j["train_tasks"] = json::array();
  for (const auto& t : ds.train_tasks) j["train_tasks"].push_back(task_to_json(t));
  j["train_queries"] = json::array();
  for (const auto& t : ds.train_queries) j["train_queries"].push_back(task_to_json(t));
  j["test_tasks"] = json::array();
  for (const auto& t : ds.test_tasks)
    j["test_tasks"].push_back({{"context", task_to_json(t.context)}, {"query", task_to_json(t.query)}});
  return j.dump();
}

MetaDataset meta_dataset_from_json(const std::string& text) {
  json j = json::parse(text);
  check_schema(j);
  MetaDataset ds;
  ds.env = j.at("env").get<std::string>();
  ds.seed = j.at("seed").get<std::uint64_t>();
  for (const auto& t : j.at("train_tasks")) ds.train_tasks.push_back(task_from_json(t));
  for (const auto& t : j.at("train_queries")) ds.train_queries.push_back(task_from_json(t));
  for (const auto& t : j.at("test_tasks"))
    ds.test_tasks.push_back({task_from_json(t.at("context")), task_from_json(t.at("query"))});
  return ds;
}

std::string to_json(const BanditPool& pool) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["candidates"] = matrix_to_json(pool.candidates);
  j["task_rewards"] = json::array();
  for (const auto& r : pool.task_rewards) j["task_rewards"].push_back(vec_to_json(r));
  j["optimum"] = pool.optimum;
  return j.dump();
}

BanditPool bandit_pool_from_json(const std::string& text) {
  json j = json::parse(text);
  check_schema(j);
  BanditPool p;
  p.candidates = matrix_from_json(j.at("candidates"));
  for (const auto& r : j.at("task_rewards")) p.task_rewards.push_back(vec_from_json(r));
  p.optimum = j.at("optimum").get<std::vector<int>>();
  return p;
}

}  // namespace pacoh
