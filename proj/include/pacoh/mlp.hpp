#pragma once

#include <vector>

#include "pacoh/numerics.hpp"

namespace pacoh {

// Fully connected tanh network with identity output. Parameters are stored
// layer by layer: the fan_out x fan_in weight matrix (row-major), then the bias.
struct MlpArchitecture {
  int input_dim = 1;
  std::vector<int> hidden;
  int output_dim = 1;

  int param_count() const;
  int num_layers() const { return static_cast<int>(hidden.size()) + 1; }
  int fan_in(int layer) const;
  int fan_out(int layer) const;
  // Offset of the weight block of a layer inside the flat vector.
  int weight_offset(int layer) const;
  int bias_offset(int layer) const { return weight_offset(layer) + fan_in(layer) * fan_out(layer); }
  void validate() const;
  bool operator==(const MlpArchitecture&) const = default;
};

using ParamRef = Eigen::Ref<const Vec>;

Vec mlp_forward(const MlpArchitecture& arch, const ParamRef& params, const Vec& x);

struct MlpGradient {
  Vec params;
  Vec input;
};

MlpGradient mlp_backward(const MlpArchitecture& arch, const ParamRef& params, const Vec& x,
                         const Vec& upstream);

// Batched variants: rows of X are samples. The backward pass returns the sum of
// the per-sample parameter gradients; input gradients are returned row-wise.
Mat mlp_forward_batch(const MlpArchitecture& arch, const ParamRef& params, const Mat& x);

struct MlpBatchGradient {
  Vec params;
  Mat inputs;
};

MlpBatchGradient mlp_backward_batch(const MlpArchitecture& arch, const ParamRef& params, const Mat& x,
                                    const Mat& upstream, bool want_inputs = false);

// Column-wise activations of a forward pass (acts[0] is the input), reusable
// by the backward pass.
struct MlpTrace {
  std::vector<Mat> acts;
  Mat output() const { return acts.back().transpose(); }
};

MlpTrace mlp_trace(const MlpArchitecture& arch, const ParamRef& params, const Mat& x);
MlpBatchGradient mlp_backward_trace(const MlpArchitecture& arch, const ParamRef& params, const MlpTrace& trace,
                                    const Mat& upstream, bool want_inputs = false);

// Weights ~ N(0, 1/fan_in), biases zero.
Vec mlp_init(const MlpArchitecture& arch, RngStream& rng);

}  // namespace pacoh
