#pragma once

#include <vector>

#include "pacoh/numerics.hpp"
#include "pacoh/predictive.hpp"

namespace pacoh {

struct CalibrationConfig {
  int levels = 20;  // H: confidence levels (regression) or bins (ECE)
  void validate() const;
};

double rmse(const Vec& predicted, const Vec& targets);

// Regression calibration error from the predictive CDF values F(y_j | x_j).
double regression_calibration_error(const Vec& cdf_values, const CalibrationConfig& cfg = {});
double regression_calibration_error(const std::vector<GaussianMixture>& predictive, const Vec& targets,
                                    const CalibrationConfig& cfg = {});

double ece(const Vec& confidences, const std::vector<int>& predicted, const std::vector<int>& labels,
           const CalibrationConfig& cfg = {});

struct RegretCurves {
  Vec average;  // r* - mean of the first t rewards
  Vec simple;   // r* - best of the first t rewards
};

RegretCurves regret_curves(const Vec& rewards, double optimum);

}  // namespace pacoh
