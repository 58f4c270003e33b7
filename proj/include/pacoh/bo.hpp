#pragma once

#include <string>
#include <vector>

#include "pacoh/bnn_prior.hpp"
#include "pacoh/environments.hpp"
#include "pacoh/pacoh_meta.hpp"

namespace pacoh {

enum class Acquisition { ucb, ts };

std::string to_string(Acquisition a);
Acquisition acquisition_from_string(const std::string& s);

// Network outputs of every particle on every arm (particles x arms).
Mat particle_outputs(const BnnModel& model, const std::vector<Mat>& particle_sets, const Mat& pool);

// argmax of mean + beta * std over particles; lowest index wins ties.
int ucb_select(const BnnModel& model, const std::vector<Mat>& particle_sets, const Mat& pool, double beta = 2.0);
// argmax of a uniformly chosen particle.
int ts_select(const BnnModel& model, const std::vector<Mat>& particle_sets, const Mat& pool, RngStream& rng);

struct BoConfig {
  int rounds = 50;
  Acquisition acquisition = Acquisition::ucb;
  double ucb_beta = 2.0;
  TargetTrainConfig target;
  int warm_steps = 50;     // target-training steps after a warm start
  bool cold_start = false; // retrain from the priors every round
  double reward_noise = 0.05;
};

struct BoHistory {
  std::vector<int> actions;
  std::vector<double> rewards;  // noiseless reward of the chosen arm
  std::vector<std::uint64_t> posterior_hashes;  // 0 for the random first round
};

std::uint64_t hash_particles(const std::vector<Mat>& particle_sets);

BoHistory run_bo(const BnnModel& model, const BanditPool& pool, int task, const std::vector<Vec>& priors,
                 const BoConfig& cfg, RngStream rng);

}  // namespace pacoh
