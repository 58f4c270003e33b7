#pragma once

#include <string>
#include <vector>

#include "pacoh/numerics.hpp"

namespace pacoh {

struct TaskDataset {
  int id = 0;
  Mat inputs;   // m x d
  Vec targets;  // m (class labels stored as 0, 1, ...)
  Vec true_params;  // optional (w* for linear environments), empty otherwise

  Eigen::Index size() const { return inputs.rows(); }
  Eigen::Index dim() const { return inputs.cols(); }
  TaskDataset subset(const std::vector<Eigen::Index>& rows) const;
};

struct TestTask {
  TaskDataset context;
  TaskDataset query;
};

struct MetaDataset {
  std::string env;
  std::uint64_t seed = 0;
  std::vector<TaskDataset> train_tasks;
  // Held-out points from the meta-training tasks, used for meta-train error.
  std::vector<TaskDataset> train_queries;
  std::vector<TestTask> test_tasks;
};

}  // namespace pacoh
