#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>

#include "pacoh/errors.hpp"

namespace pacoh {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

struct ValueGrad {
  double value = 0.0;
  Vec grad;
};

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

// Cholesky factorization with diagonal jitter escalation. Starts at
// 1e-6 * mean(diag) and multiplies by 10 up to three times.
class SpdFactor {
 public:
  explicit SpdFactor(const Mat& a);

  Mat solve(const Mat& b) const;
  Vec solve(const Vec& b) const;
  double log_det() const { return log_det_; }
  double jitter() const { return jitter_; }
  const Mat& lower() const { return lower_; }
  Mat inverse() const;

 private:
  Mat lower_;
  double log_det_ = 0.0;
  double jitter_ = 0.0;
};

struct SolveResult {
  Mat solution;
  double log_det;
};

SolveResult cholesky_logdet_solve(const Mat& a, const Mat& b);

double logsumexp(const Vec& v);

// Softmax weights exp(v_i - logsumexp(v)).
Vec softmax(const Vec& v);

struct DiagonalGaussian {
  Vec mean;
  Vec log_std;

  DiagonalGaussian() = default;
  DiagonalGaussian(Vec mean_, Vec log_std_);
  static DiagonalGaussian isotropic(const Vec& mean, double std);

  Eigen::Index dim() const { return mean.size(); }
  Vec std() const { return log_std.array().exp(); }
};

double gaussian_logpdf(const Vec& x, const DiagonalGaussian& g);
Vec gaussian_logpdf_grad(const Vec& x, const DiagonalGaussian& g);

double normal_cdf(double z);

// Counter-based generator: draw i of a stream is a hash of
// (seed, stream_id, i), so streams never share state.
class RngStream {
 public:
  struct State {
    std::uint64_t seed = 0;
    std::uint64_t stream_id = 0;
    std::uint64_t counter = 0;
    bool operator==(const State&) const = default;
  };

  explicit RngStream(std::uint64_t seed = 0, std::uint64_t stream_id = 0);

  std::uint64_t next_u64();
  // Uniform on the open interval (0, 1).
  double uniform();
  double uniform(double lo, double hi);
  double normal();
  double normal(double mean, double std);
  // Uniform integer in [0, n).
  std::uint64_t index(std::uint64_t n);
  Vec normal_vector(Eigen::Index n);

  RngStream fork(std::uint64_t label) const;

  State state() const { return {seed_, stream_id_, counter_}; }
  static RngStream from_state(const State& s);
  std::string serialize() const;
  static RngStream restore(const std::string& text);

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint64_t counter_ = 0;
  std::uint64_t key_a_;
  std::uint64_t key_b_;
};

RngStream rng_fork(const RngStream& parent, std::uint64_t label);

std::uint64_t mix64(std::uint64_t x);

}  // namespace pacoh
