#pragma once

#include <string>
#include <vector>

#include "pacoh/experiments.hpp"

namespace pacoh {

struct ExperimentConfig {
  std::uint64_t seed = 0;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  EnvConfig env;
  ModelConfig model;
  MetaTrainConfig meta;
  MetaTestConfig test;
  bool vanilla = false;
  std::string checkpoint;  // meta-test / bo input
  std::string bound_env = "blr";
  BlrBoundSweepConfig blr;
  LogregBoundSweepConfig logreg;
  BoExperimentConfig bo;

  // Pushes the global seed into the sections that carry their own copy.
  void apply_seed(std::uint64_t s);
};

// Strict parse: unknown keys and ill-typed values raise ConfigError.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

// Normalized dump of the sections a subcommand reads. MAP is written as
// single-particle SVGD so both spellings hash alike.
std::string canonical_config(const ExperimentConfig& cfg, const std::string& command);
std::string config_hash(const ExperimentConfig& cfg, const std::string& command);

// "# <tool> config_hash=<hash> seed=<seed>"
std::string output_header(const std::string& hash, std::uint64_t seed);

}  // namespace pacoh
