#pragma once

#include <memory>
#include <string>

#include "pacoh/meta_models.hpp"
#include "pacoh/pacoh_meta.hpp"

namespace pacoh {

inline constexpr const char* kToolVersion = "pacoh_lab 0.1.0";

// Enough to rebuild the prior family a hyper-posterior refers to.
struct ModelDescriptor {
  std::string kind = "gp";  // gp | bnn
  GpModel gp;
  BnnModel bnn;
  double prior_log_std_center = 0.0;

  std::unique_ptr<MetaModel> build() const;
  bool operator==(const ModelDescriptor& o) const;
};

struct Checkpoint {
  static constexpr int kVersion = 1;
  int version = kVersion;
  ModelDescriptor model;
  std::string tool = kToolVersion;
  std::string config_hash;
  std::uint64_t seed = 0;
  HyperPosteriorApprox approx;
};

// MAP and single-particle SVGD share one representation on disk.
HyperPosteriorApprox canonical(const HyperPosteriorApprox& approx);

std::string checkpoint_to_json(const Checkpoint& ckpt);
Checkpoint checkpoint_from_json(const std::string& text);

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace pacoh
