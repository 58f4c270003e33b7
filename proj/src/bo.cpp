#include "pacoh/bo.hpp"

#include <cstring>

namespace pacoh {

std::string to_string(Acquisition a) { return a == Acquisition::ucb ? "ucb" : "ts"; }

Acquisition acquisition_from_string(const std::string& s) {
  if (s == "ucb") return Acquisition::ucb;
  if (s == "ts") return Acquisition::ts;
  throw ConfigError("unknown acquisition '" + s + "'");
}

Mat particle_outputs(const BnnModel& model, const std::vector<Mat>& particle_sets, const Mat& pool) {
  if (pool.rows() == 0) throw EmptyPool("particle_outputs: empty pool");
  Eigen::Index total = 0;
  for (const auto& s : particle_sets) total += s.rows();
  if (total == 0) throw EmptyInput("particle_outputs: no particles");
  Mat out(total, pool.rows());
  Eigen::Index r = 0;
  for (const auto& set : particle_sets)
    for (Eigen::Index l = 0; l < set.rows(); ++l, ++r)
      out.row(r) = bnn_outputs(model, set.row(l).transpose(), pool).col(0).transpose();
  return out;
}

int ucb_select(const BnnModel& model, const std::vector<Mat>& particle_sets, const Mat& pool, double beta) {
  const Mat f = particle_outputs(model, particle_sets, pool);
  const Eigen::RowVectorXd mean = f.colwise().mean();
  const Eigen::RowVectorXd sd = ((f.rowwise() - mean).array().square().colwise().mean()).sqrt().matrix();
  const Eigen::RowVectorXd ucb = mean + beta * sd;
  int best = 0;
  for (Eigen::Index a = 1; a < ucb.size(); ++a)
    if (ucb[a] > ucb[best]) best = static_cast<int>(a);
  return best;
}

int ts_select(const BnnModel& model, const std::vector<Mat>& particle_sets, const Mat& pool, RngStream& rng) {
  if (pool.rows() == 0) throw EmptyPool("ts_select: empty pool");
  Eigen::Index total = 0;
  for (const auto& s : particle_sets) total += s.rows();
  if (total == 0) throw EmptyInput("ts_select: no particles");
  auto pick = static_cast<Eigen::Index>(rng.index(static_cast<std::uint64_t>(total)));
  for (const auto& set : particle_sets) {
    if (pick < set.rows()) {
      const Vec f = bnn_outputs(model, set.row(pick).transpose(), pool).col(0);
      Eigen::Index best = 0;
      f.maxCoeff(&best);
      return static_cast<int>(best);
    }
    pick -= set.rows();
  }
  return 0;
}

std::uint64_t hash_particles(const std::vector<Mat>& particle_sets) {
  std::uint64_t h = 0x9e3779b97f4a7c15ULL;
  for (const auto& set : particle_sets)
    for (Eigen::Index i = 0; i < set.size(); ++i) {
      std::uint64_t bits;
      const double v = set.data()[i];
      std::memcpy(&bits, &v, sizeof bits);
      h = mix64(h ^ bits);
    }
  return h;
}

BoHistory run_bo(const BnnModel& model, const BanditPool& pool, int task, const std::vector<Vec>& priors,
                 const BoConfig& cfg, RngStream rng) {
  if (cfg.rounds < 1) throw ConfigError("run_bo: rounds must be >= 1");
  if (pool.candidates.rows() == 0) throw EmptyPool("run_bo: empty pool");
  if (task < 0 || task >= static_cast<int>(pool.task_rewards.size())) throw InvalidRange("run_bo: task index");
  const Vec& reward = pool.task_rewards[static_cast<size_t>(task)];
  const Mat& x = pool.candidates;

  BoHistory hist;
  TaskDataset data;
  data.id = task;
  data.inputs.resize(0, x.cols());
  std::vector<Mat> particles;
  RngStream noise = rng.fork(0);
  RngStream select = rng.fork(1);
  for (int t = 0; t < cfg.rounds; ++t) {
    int action = 0;
    std::uint64_t hash = 0;
    if (t == 0) {
      action = static_cast<int>(select.index(static_cast<std::uint64_t>(x.rows())));
    } else {
      TargetTrainConfig tc = cfg.target;
      const bool warm = !cfg.cold_start && !particles.empty();
      if (warm) tc.steps = cfg.warm_steps;
      particles = target_train(model, priors, data, static_cast<double>(data.size()), tc,
                               rng.fork(2).fork(static_cast<std::uint64_t>(t)), warm ? &particles : nullptr);
      hash = hash_particles(particles);
      action = cfg.acquisition == Acquisition::ucb ? ucb_select(model, particles, x, cfg.ucb_beta)
                                                   : ts_select(model, particles, x, select);
    }
    hist.actions.push_back(action);
    hist.rewards.push_back(reward[action]);
    hist.posterior_hashes.push_back(hash);
    const Eigen::Index m = data.size();
    data.inputs.conservativeResize(m + 1, Eigen::NoChange);
    data.targets.conservativeResize(m + 1);
    data.inputs.row(m) = x.row(action);
    data.targets[m] = reward[action] + cfg.reward_noise * noise.normal();
  }
  return hist;
}

}  // namespace pacoh
