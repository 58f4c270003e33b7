#include "pacoh/evaluation.hpp"

#include <algorithm>
#include <cmath>

namespace pacoh {

void CalibrationConfig::validate() const {
  if (levels < 2) throw ConfigError("calibration: levels must be >= 2");
}

double rmse(const Vec& predicted, const Vec& targets) {
  if (predicted.size() != targets.size()) throw LengthMismatch("rmse: predicted and targets differ in length");
  if (predicted.size() == 0) throw EmptyInput("rmse: no points");
  return std::sqrt((predicted - targets).squaredNorm() / static_cast<double>(predicted.size()));
}

double regression_calibration_error(const Vec& cdf_values, const CalibrationConfig& cfg) {
  cfg.validate();
  if (cdf_values.size() == 0) throw EmptyInput("regression_calibration_error: no points");
  std::vector<double> sorted(cdf_values.data(), cdf_values.data() + cdf_values.size());
  std::sort(sorted.begin(), sorted.end());
  const double count = static_cast<double>(sorted.size());
  double acc = 0.0;
  for (int h = 1; h <= cfg.levels; ++h) {
    const double q = static_cast<double>(h) / cfg.levels;
    const auto below = std::upper_bound(sorted.begin(), sorted.end(), q) - sorted.begin();
    acc += std::abs(static_cast<double>(below) / count - q);
  }
  return acc / cfg.levels;
}

double regression_calibration_error(const std::vector<GaussianMixture>& predictive, const Vec& targets,
                                    const CalibrationConfig& cfg) {
  if (static_cast<Eigen::Index>(predictive.size()) != targets.size())
    throw LengthMismatch("regression_calibration_error: predictions and targets differ in length");
  Vec f(targets.size());
  for (Eigen::Index j = 0; j < targets.size(); ++j) f[j] = predictive[static_cast<size_t>(j)].cdf(targets[j]);
  return regression_calibration_error(f, cfg);
}

double ece(const Vec& confidences, const std::vector<int>& predicted, const std::vector<int>& labels,
           const CalibrationConfig& cfg) {
  cfg.validate();
  const auto m = static_cast<size_t>(confidences.size());
  if (predicted.size() != m || labels.size() != m) throw LengthMismatch("ece: input lengths differ");
  if (m == 0) throw EmptyInput("ece: no points");
  std::vector<double> conf_sum(cfg.levels, 0.0), hits(cfg.levels, 0.0), count(cfg.levels, 0.0);
  for (size_t j = 0; j < m; ++j) {
    const double c = confidences[static_cast<Eigen::Index>(j)];
    if (!(c > 0.0 && c <= 1.0)) throw InvalidRange("ece: confidences must lie in (0, 1]");
    int bin = std::clamp(static_cast<int>(std::ceil(c * cfg.levels)) - 1, 0, cfg.levels - 1);
    // c * H can round across a bin edge.
    if (bin > 0 && c <= static_cast<double>(bin) / cfg.levels) --bin;
    if (bin < cfg.levels - 1 && c > static_cast<double>(bin + 1) / cfg.levels) ++bin;
    conf_sum[bin] += c;
    hits[bin] += predicted[j] == labels[j] ? 1.0 : 0.0;
    count[bin] += 1.0;
  }
  double acc = 0.0;
  for (int h = 0; h < cfg.levels; ++h)
    if (count[h] > 0.0) acc += std::abs(hits[h] - conf_sum[h]) / static_cast<double>(m);
  return acc;
}

RegretCurves regret_curves(const Vec& rewards, double optimum) {
  if (rewards.size() == 0) throw EmptyInput("regret_curves: empty history");
  RegretCurves out{Vec(rewards.size()), Vec(rewards.size())};
  double total = 0.0;
  double best = -std::numeric_limits<double>::infinity();
  for (Eigen::Index t = 0; t < rewards.size(); ++t) {
    total += rewards[t];
    best = std::max(best, rewards[t]);
    out.average[t] = optimum - total / static_cast<double>(t + 1);
    out.simple[t] = optimum - best;
  }
  return out;
}

}  // namespace pacoh
