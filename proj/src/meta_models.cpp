#include "pacoh/meta_models.hpp"

#include "pacoh/bounds.hpp"

namespace pacoh {

ValueGrad GpMetaModel::log_z(const Vec& phi, const TaskDataset& task, double, int, RngStream, bool want_grad) const {
  if (want_grad) return gp_mll_with_grad(model_, phi, task.inputs, task.targets);
  return {gp_mll(model_, phi, task.inputs, task.targets), Vec()};
}

ValueGrad BnnMetaModel::log_z(const Vec& phi, const TaskDataset& task, double beta, int num_samples, RngStream rng,
                              bool want_grad) const {
  auto r = mll_lse_with_grad(model_, phi, task.inputs, task.targets, beta, num_samples, rng, want_grad);
  return {r.estimate.value, std::move(r.grad)};
}

ValueGrad BlrMetaModel::log_z(const Vec& phi, const TaskDataset& task, double beta, int, RngStream,
                              bool want_grad) const {
  auto r = blr_log_z_with_grad(phi, prior_var_, task.inputs, task.targets, beta, lik_var_);
  if (!want_grad) r.grad = Vec();
  return r;
}

}  // namespace pacoh
