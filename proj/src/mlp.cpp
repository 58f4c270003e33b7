#include "pacoh/mlp.hpp"

#include <cmath>
#include <string>

namespace pacoh {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Eigen::Map<const RowMat> weight(const MlpArchitecture& a, const ParamRef& p, int l) {
  return {p.data() + a.weight_offset(l), a.fan_out(l), a.fan_in(l)};
}

Eigen::Map<const Vec> bias(const MlpArchitecture& a, const ParamRef& p, int l) {
  return {p.data() + a.bias_offset(l), a.fan_out(l)};
}

void check_params(const MlpArchitecture& arch, const ParamRef& params) {
  if (params.size() != arch.param_count())
    throw DimensionMismatch("mlp: expected " + std::to_string(arch.param_count()) + " params, got " +
                            std::to_string(params.size()));
  if (!params.allFinite()) throw DivergenceDetected("mlp: non-finite parameters");
}

// Activations stored column-wise (one column per sample); acts[0] is the input.
std::vector<Mat> forward_all(const MlpArchitecture& arch, const ParamRef& params, const Mat& x_cols) {
  std::vector<Mat> acts;
  acts.reserve(arch.num_layers() + 1);
  acts.push_back(x_cols);
  for (int l = 0; l < arch.num_layers(); ++l) {
    Mat z = weight(arch, params, l) * acts.back();
    z.colwise() += bias(arch, params, l);
    if (l + 1 < arch.num_layers()) z = z.array().tanh().matrix();
    acts.push_back(std::move(z));
  }
  return acts;
}

}  // namespace

int MlpArchitecture::fan_in(int layer) const { return layer == 0 ? input_dim : hidden[layer - 1]; }

int MlpArchitecture::fan_out(int layer) const {
  return layer == static_cast<int>(hidden.size()) ? output_dim : hidden[layer];
}

int MlpArchitecture::weight_offset(int layer) const {
  int off = 0;
  for (int l = 0; l < layer; ++l) off += (fan_in(l) + 1) * fan_out(l);
  return off;
}

int MlpArchitecture::param_count() const { return weight_offset(num_layers()); }

void MlpArchitecture::validate() const {
  if (input_dim < 1 || output_dim < 1) throw InvalidRange("mlp: widths must be >= 1");
  for (int w : hidden)
    if (w < 1) throw InvalidRange("mlp: widths must be >= 1");
}

Vec mlp_forward(const MlpArchitecture& arch, const ParamRef& params, const Vec& x) {
  if (x.size() != arch.input_dim) throw DimensionMismatch("mlp_forward: input dimension");
  check_params(arch, params);
  Mat out = forward_all(arch, params, x).back();
  return out.col(0);
}

MlpGradient mlp_backward(const MlpArchitecture& arch, const ParamRef& params, const Vec& x,
                         const Vec& upstream) {
  if (x.size() != arch.input_dim) throw DimensionMismatch("mlp_backward: input dimension");
  if (upstream.size() != arch.output_dim) throw DimensionMismatch("mlp_backward: upstream dimension");
  Mat xr = x.transpose();
  Mat ur = upstream.transpose();
  auto g = mlp_backward_batch(arch, params, xr, ur, true);
  return {std::move(g.params), g.inputs.row(0).transpose()};
}

Mat mlp_forward_batch(const MlpArchitecture& arch, const ParamRef& params, const Mat& x) {
  if (x.cols() != arch.input_dim) throw DimensionMismatch("mlp_forward: input dimension");
  check_params(arch, params);
  return forward_all(arch, params, x.transpose()).back().transpose();
}

MlpTrace mlp_trace(const MlpArchitecture& arch, const ParamRef& params, const Mat& x) {
  if (x.cols() != arch.input_dim) throw DimensionMismatch("mlp_forward: input dimension");
  check_params(arch, params);
  return {forward_all(arch, params, x.transpose())};
}

MlpBatchGradient mlp_backward_trace(const MlpArchitecture& arch, const ParamRef& params, const MlpTrace& trace,
                                    const Mat& upstream, bool want_inputs) {
  const auto& acts = trace.acts;
  if (upstream.cols() != arch.output_dim || upstream.rows() != acts.front().cols())
    throw DimensionMismatch("mlp_backward: upstream shape");
  MlpBatchGradient out;
  out.params = Vec::Zero(arch.param_count());
  Mat delta = upstream.transpose();
  for (int l = arch.num_layers() - 1; l >= 0; --l) {
    Eigen::Map<RowMat> gw(out.params.data() + arch.weight_offset(l), arch.fan_out(l), arch.fan_in(l));
    gw.noalias() = delta * acts[l].transpose();
    Eigen::Map<Vec>(out.params.data() + arch.bias_offset(l), arch.fan_out(l)) = delta.rowwise().sum();
    if (l == 0 && !want_inputs) break;
    Mat back = weight(arch, params, l).transpose() * delta;
    if (l > 0) back.array() *= 1.0 - acts[l].array().square();
    delta = std::move(back);
  }
  if (want_inputs) out.inputs = delta.transpose();
  return out;
}

MlpBatchGradient mlp_backward_batch(const MlpArchitecture& arch, const ParamRef& params, const Mat& x,
                                    const Mat& upstream, bool want_inputs) {
  return mlp_backward_trace(arch, params, mlp_trace(arch, params, x), upstream, want_inputs);
}

Vec mlp_init(const MlpArchitecture& arch, RngStream& rng) {
  Vec p = Vec::Zero(arch.param_count());
  for (int l = 0; l < arch.num_layers(); ++l) {
    double sd = 1.0 / std::sqrt(static_cast<double>(arch.fan_in(l)));
    int n = arch.fan_in(l) * arch.fan_out(l);
    for (int i = 0; i < n; ++i) p[arch.weight_offset(l) + i] = sd * rng.normal();
  }
  return p;
}

}  // namespace pacoh
