#pragma once

#include <memory>
#include <string>

#include "pacoh/bnn_prior.hpp"
#include "pacoh/data.hpp"
#include "pacoh/gp_prior.hpp"

namespace pacoh {

// A family of priors P_phi together with the (generalized) marginal
// log-likelihood log Z_beta(S, P_phi) and its gradient in phi.
class MetaModel {
 public:
  virtual ~MetaModel() = default;
  virtual std::string kind() const = 0;
  virtual int dim() const = 0;
  // Center of the hyper-prior; the hyper-prior is N(center, std^2 I).
  virtual Vec hyper_prior_center() const { return Vec::Zero(dim()); }
  // False when log_z is a Monte-Carlo estimate.
  virtual bool exact() const = 0;
  // Exact models with a fixed beta ignore the argument.
  virtual ValueGrad log_z(const Vec& phi, const TaskDataset& task, double beta, int num_samples, RngStream rng,
                          bool want_grad) const = 0;
};

class GpMetaModel : public MetaModel {
 public:
  explicit GpMetaModel(GpModel model) : model_(std::move(model)) {}
  std::string kind() const override { return "gp"; }
  int dim() const override { return model_.dim(); }
  bool exact() const override { return true; }
  ValueGrad log_z(const Vec& phi, const TaskDataset& task, double beta, int num_samples, RngStream rng,
                  bool want_grad) const override;
  const GpModel& model() const { return model_; }

 private:
  GpModel model_;
};

class BnnMetaModel : public MetaModel {
 public:
  explicit BnnMetaModel(BnnModel model, double prior_log_std_center = 0.0)
      : model_(std::move(model)), log_std_center_(prior_log_std_center) {}
  std::string kind() const override { return "bnn"; }
  int dim() const override { return model_.dim(); }
  Vec hyper_prior_center() const override { return model_.prior_center(log_std_center_); }
  bool exact() const override { return false; }
  ValueGrad log_z(const Vec& phi, const TaskDataset& task, double beta, int num_samples, RngStream rng,
                  bool want_grad) const override;
  const BnnModel& model() const { return model_; }
  double prior_log_std_center() const { return log_std_center_; }

 private:
  BnnModel model_;
  double log_std_center_;
};

// Linear model with prior N(phi, prior_var I) over weights and Gaussian
// negative log-likelihood loss; log Z is available in closed form.
class BlrMetaModel : public MetaModel {
 public:
  BlrMetaModel(int d, double prior_var, double likelihood_var)
      : d_(d), prior_var_(prior_var), lik_var_(likelihood_var) {}
  std::string kind() const override { return "blr"; }
  int dim() const override { return d_; }
  bool exact() const override { return true; }
  ValueGrad log_z(const Vec& phi, const TaskDataset& task, double beta, int num_samples, RngStream rng,
                  bool want_grad) const override;

 private:
  int d_;
  double prior_var_;
  double lik_var_;
};

}  // namespace pacoh
