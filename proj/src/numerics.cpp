#include "pacoh/numerics.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace pacoh {

namespace {

bool try_cholesky(const Mat& a, Mat& lower) {
  Eigen::LLT<Mat> llt(a);
  if (llt.info() != Eigen::Success) return false;
  lower = llt.matrixL();
  for (Eigen::Index i = 0; i < lower.rows(); ++i) {
    double d = lower(i, i);
    if (!(d > 0.0) || !std::isfinite(d)) return false;
  }
  return true;
}

}  // namespace

SpdFactor::SpdFactor(const Mat& a) {
  if (a.rows() != a.cols()) throw DimensionMismatch("cholesky: matrix is not square");
  if (!a.allFinite()) throw NotPositiveDefinite("cholesky: non-finite entries");
  const Eigen::Index n = a.rows();
  if (n == 0) return;
  if (!try_cholesky(a, lower_)) {
    double base = 1e-6 * a.diagonal().mean();
    if (!(base > 0.0)) base = 1e-6;
    bool ok = false;
    for (int k = 0; k < 4 && !ok; ++k) {
      jitter_ = base * std::pow(10.0, k);
      Mat aj = a;
      aj.diagonal().array() += jitter_;
      ok = try_cholesky(aj, lower_);
    }
    if (!ok) throw NotPositiveDefinite("cholesky: jitter escalation exhausted");
  }
  log_det_ = 2.0 * lower_.diagonal().array().log().sum();
}

Mat SpdFactor::solve(const Mat& b) const {
  if (b.rows() != lower_.rows()) throw DimensionMismatch("cholesky solve: row mismatch");
  Mat y = lower_.triangularView<Eigen::Lower>().solve(b);
  return lower_.transpose().triangularView<Eigen::Upper>().solve(y);
}

Vec SpdFactor::solve(const Vec& b) const {
  if (b.size() != lower_.rows()) throw DimensionMismatch("cholesky solve: row mismatch");
  Vec y = lower_.triangularView<Eigen::Lower>().solve(b);
  return lower_.transpose().triangularView<Eigen::Upper>().solve(y);
}

Mat SpdFactor::inverse() const {
  return solve(Mat(Mat::Identity(lower_.rows(), lower_.rows())));
}

SolveResult cholesky_logdet_solve(const Mat& a, const Mat& b) {
  if (a.rows() != a.cols()) throw DimensionMismatch("cholesky: matrix is not square");
  double scale = a.cwiseAbs().maxCoeff();
  if ((a - a.transpose()).cwiseAbs().maxCoeff() > 1e-9 * std::max(scale, 1.0))
    throw NotPositiveDefinite("cholesky: matrix is not symmetric");
  SpdFactor f(a);
  return {f.solve(b), f.log_det()};
}

double logsumexp(const Vec& v) {
  if (v.size() == 0) throw EmptyInput("logsumexp: empty input");
  double mx = v.maxCoeff();
  if (mx == -std::numeric_limits<double>::infinity()) return mx;
  if (!std::isfinite(mx)) return mx;
  double s = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) s += std::exp(v[i] - mx);
  return mx + std::log(s);
}

Vec softmax(const Vec& v) {
  double lse = logsumexp(v);
  return (v.array() - lse).exp().matrix();
}

DiagonalGaussian::DiagonalGaussian(Vec mean_, Vec log_std_)
    : mean(std::move(mean_)), log_std(std::move(log_std_)) {
  if (mean.size() != log_std.size()) throw DimensionMismatch("DiagonalGaussian: mean/log_std length");
}

DiagonalGaussian DiagonalGaussian::isotropic(const Vec& mean, double std) {
  return DiagonalGaussian(mean, Vec::Constant(mean.size(), std::log(std)));
}

double gaussian_logpdf(const Vec& x, const DiagonalGaussian& g) {
  if (x.size() != g.dim()) throw DimensionMismatch("gaussian_logpdf: dimension mismatch");
  double acc = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    double z = (x[i] - g.mean[i]) * std::exp(-g.log_std[i]);
    acc += -0.5 * z * z - g.log_std[i] - 0.5 * kLog2Pi;
  }
  return acc;
}

Vec gaussian_logpdf_grad(const Vec& x, const DiagonalGaussian& g) {
  if (x.size() != g.dim()) throw DimensionMismatch("gaussian_logpdf: dimension mismatch");
  return -((x - g.mean).array() * (-2.0 * g.log_std.array()).exp()).matrix();
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

std::uint64_t mix64(std::uint64_t x) {
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return x;
}

namespace {
constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;
}

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed),
      stream_id_(stream_id),
      key_a_(mix64(seed + kGolden)),
      key_b_(mix64(stream_id ^ mix64(seed ^ 0x6a09e667f3bcc909ULL))) {}

std::uint64_t RngStream::next_u64() {
  std::uint64_t z = mix64(key_a_ + (counter_++) * kGolden);
  return mix64(z ^ key_b_);
}

double RngStream::uniform() {
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double RngStream::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double RngStream::normal() {
  double u1 = uniform();
  double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double RngStream::normal(double mean, double std) { return mean + std * normal(); }

std::uint64_t RngStream::index(std::uint64_t n) {
  if (n == 0) throw InvalidRange("RngStream::index: empty range");
  // Rejection sampling keeps the draw unbiased for any n.
  std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x;
  do {
    x = next_u64();
  } while (x >= limit);
  return x % n;
}

Vec RngStream::normal_vector(Eigen::Index n) {
  // Marsaglia polar method, using both outputs of each accepted pair.
  Vec v(n);
  Eigen::Index i = 0;
  while (i < n) {
    // Both coordinates come from the two 32-bit halves of one draw.
    const std::uint64_t u = next_u64();
    const double a = (static_cast<double>(u >> 32) + 0.5) * 0x1.0p-31 - 1.0;
    const double b = (static_cast<double>(u & 0xffffffffULL) + 0.5) * 0x1.0p-31 - 1.0;
    const double s = a * a + b * b;
    if (s >= 1.0 || s == 0.0) continue;
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    v[i++] = a * f;
    if (i < n) v[i++] = b * f;
  }
  return v;
}

RngStream RngStream::fork(std::uint64_t label) const {
  return RngStream(seed_, mix64(stream_id_ * kGolden ^ mix64(label + 0x3c6ef372fe94f82bULL)));
}

RngStream RngStream::from_state(const State& s) {
  RngStream r(s.seed, s.stream_id);
  r.counter_ = s.counter;
  return r;
}

std::string RngStream::serialize() const {
  std::ostringstream os;
  os << seed_ << ':' << stream_id_ << ':' << counter_;
  return os.str();
}

RngStream RngStream::restore(const std::string& text) {
  State s;
  char c1 = 0, c2 = 0;
  std::istringstream is(text);
  is >> s.seed >> c1 >> s.stream_id >> c2 >> s.counter;
  if (!is || c1 != ':' || c2 != ':') throw InvalidRange("RngStream::restore: malformed state '" + text + "'");
  return from_state(s);
}

RngStream rng_fork(const RngStream& parent, std::uint64_t label) { return parent.fork(label); }

}  // namespace pacoh
