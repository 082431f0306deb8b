#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "sedenet/layers.hpp"
#include "sedenet/nn.hpp"
#include "sedenet/prng.hpp"
#include "sedenet/tensor.hpp"

namespace sedenet {

struct ModelConfig {
  size_t in_dynamic_channels = 9;
  size_t in_static_channels = 7;
  size_t out_channels_per_frame = 8;
  size_t frames_in = 12;
  size_t frames_out = 6;
  size_t depth = 3;
  std::vector<size_t> per_component_widths = {16, 32, 64, 64};
  size_t blocks_per_group = 1;
  std::string upsample = "nearest";
  std::vector<size_t> output_components = {1, 2, 3, 6, 9, 12};
  bool final_bias = true;
};

/// Throws std::invalid_argument describing the first violated constraint.
void validate_config(const ModelConfig& cfg);

/// Named handle onto a trainable tensor and its gradient buffer.
struct ParamRef {
  std::string name;
  Tensor* value = nullptr;
  Tensor* grad = nullptr;
};

/// Named handle onto non-trainable state (batchnorm running stats).
struct BufferRef {
  std::string name;
  Tensor* value = nullptr;
};

/// Real 2-D convolution with stored input for the backward pass.
class RealConv {
 public:
  RealConv() = default;
  RealConv(const Conv2dSpec& spec, bool bias, Prng& rng);

  Tensor forward(const Tensor& x, bool train);
  Tensor backward(const Tensor& grad_out);
  void zero_grad();
  void collect(const std::string& prefix, std::vector<ParamRef>& params);
  size_t param_count() const;

 private:
  Conv2dSpec spec_;
  Tensor weight_, bias_, grad_weight_, grad_bias_;
  Tensor input_cache_;
  bool has_bias_ = false;
};

/// Per-channel batchnorm holding its own parameters and running stats.
class BatchNorm {
 public:
  BatchNorm() = default;
  explicit BatchNorm(size_t channels);

  Tensor forward(const Tensor& x, bool train);
  Tensor backward(const Tensor& grad_out);
  void zero_grad();
  void collect(const std::string& prefix, std::vector<ParamRef>& params,
               std::vector<BufferRef>& buffers);
  size_t param_count() const { return gamma_.size() + beta_.size(); }

 private:
  Tensor gamma_, beta_, grad_gamma_, grad_beta_;
  Tensor running_mean_, running_var_;
  BnCache cache_;
  float momentum_ = 0.1f;
  float eps_ = 1e-5f;
};

/// HxConvLayer plus the input cache explicit backprop needs.
class HxConvNode {
 public:
  HxConvNode() = default;
  HxConvNode(const HxConvSpec& spec, Prng& rng, HxInit scheme = HxInit::kGlorotUniform)
      : layer_(spec, rng, scheme) {}

  Tensor forward(const Tensor& x, bool train);
  Tensor backward(const Tensor& grad_out);
  void zero_grad() { layer_.zero_grad(); }
  void collect(const std::string& prefix, std::vector<ParamRef>& params);
  const HxConvLayer& layer() const { return layer_; }
  size_t param_count() const { return layer_.param_count(); }

 private:
  HxConvLayer layer_;
  Tensor input_cache_;
};

/// Lifts the static map to the dynamic channel width:
/// conv3x3 -> BN -> ReLU -> conv3x3(+bias), spatial dims preserved.
class LearnVectorBlock {
 public:
  LearnVectorBlock() = default;
  LearnVectorBlock(size_t in_channels, size_t out_channels, Prng& rng);

  Tensor forward(const Tensor& x, bool train);
  Tensor backward(const Tensor& grad_out);
  void zero_grad();
  void collect(const std::string& prefix, std::vector<ParamRef>& params,
               std::vector<BufferRef>& buffers);

 private:
  RealConv conv1_, conv2_;
  BatchNorm bn_;
  Tensor bn_out_cache_;
};

/// Pre-activation residual block over sedenion feature maps:
/// BN -> ReLU -> hxconv3x3 -> BN -> ReLU -> hxconv3x3, plus identity
/// (1x1 hxconv projection when the width changes).
class ResidualBlock {
 public:
  ResidualBlock() = default;
  ResidualBlock(size_t comp_in, size_t comp_out, Prng& rng);

  Tensor forward(const Tensor& x, bool train);
  Tensor backward(const Tensor& grad_out);
  void zero_grad();
  void collect(const std::string& prefix, std::vector<ParamRef>& params,
               std::vector<BufferRef>& buffers);

 private:
  BatchNorm bn1_, bn2_;
  HxConvNode conv1_, conv2_;
  HxConvNode proj_;
  bool has_proj_ = false;
  Tensor pre1_cache_, pre2_cache_;
};

/// Residual blocks followed by a stride-2 sedenion convolution. Returns the
/// pooled output and keeps the pre-pooling activation as the skip.
class EncoderGroup {
 public:
  EncoderGroup() = default;
  EncoderGroup(size_t comp_in, size_t comp_out, size_t blocks, Prng& rng);

  std::pair<Tensor, Tensor> forward(const Tensor& x, bool train);  // {out, skip}
  Tensor backward(const Tensor& grad_out, const Tensor& grad_skip);
  void zero_grad();
  void collect(const std::string& prefix, std::vector<ParamRef>& params,
               std::vector<BufferRef>& buffers);

 private:
  std::vector<ResidualBlock> blocks_;
  HxConvNode pool_;
};

/// Bottleneck: BN -> ReLU -> hxconv3x3.
class CodeBlock {
 public:
  CodeBlock() = default;
  CodeBlock(size_t comp_in, size_t comp_out, Prng& rng);

  Tensor forward(const Tensor& x, bool train);
  Tensor backward(const Tensor& grad_out);
  void zero_grad();
  void collect(const std::string& prefix, std::vector<ParamRef>& params,
               std::vector<BufferRef>& buffers);

 private:
  BatchNorm bn_;
  HxConvNode conv_;
  Tensor pre_cache_;
};

/// Upsample2x -> component-wise concat with the skip -> hxconv3x3 down to
/// the target width -> one residual block.
class DecoderGroup {
 public:
  DecoderGroup() = default;
  DecoderGroup(size_t comp_dec, size_t comp_skip, size_t comp_out, Prng& rng);

  Tensor forward(const Tensor& dec_in, const Tensor& skip, bool train);
  std::pair<Tensor, Tensor> backward(const Tensor& grad_out);  // {grad_dec, grad_skip}
  void zero_grad();
  void collect(const std::string& prefix, std::vector<ParamRef>& params,
               std::vector<BufferRef>& buffers);

 private:
  HxConvNode reduce_;
  ResidualBlock block_;
  size_t comp_dec_ = 0, comp_skip_ = 0;
};

/// Concatenates two component-major maps component by component:
/// output component k = [a_k | b_k].
Tensor concat_components(const Tensor& a, const Tensor& b, size_t ca, size_t cb);
std::pair<Tensor, Tensor> split_components(const Tensor& cat, size_t ca, size_t cb);

/// Aggregated network input [N, 16*Cg, H, W]: component 0 carries the learned
/// static features, components 1..12 the dynamic frames oldest to newest,
/// components 13..15 are zero.
struct PackedInput {
  Tensor tensor;
};

PackedInput pack_input(const Tensor& static_features,
                       const std::vector<Tensor>& dynamic_frames);

class SedUNet {
 public:
  SedUNet(const ModelConfig& cfg, Prng& rng);

  /// static_input [N,7,H,W], dynamic_frames 12 x [N,9,H,W] -> [N,16*8,H,W].
  /// Spatial dims must be divisible by 2^depth.
  Tensor forward(const Tensor& static_input,
                 const std::vector<Tensor>& dynamic_frames, bool train);

  /// Propagates grad_out back through the whole pipeline, accumulating
  /// parameter gradients. Requires a preceding train-mode forward.
  void backward(const Tensor& grad_out);

  void zero_grad();
  std::vector<ParamRef> parameters();
  std::vector<BufferRef> buffers();
  size_t param_count();
  const ModelConfig& config() const { return cfg_; }

 private:
  ModelConfig cfg_;
  LearnVectorBlock learn_vector_;
  std::vector<EncoderGroup> encoders_;
  CodeBlock code_;
  std::vector<DecoderGroup> decoders_;  // deepest first
  HxConvNode final_;
  std::vector<Tensor> skip_cache_;
};

/// Extracts the configured output components: [N,16*8,H,W] -> [N,6,8,H,W]
/// in horizon order.
Tensor select_outputs(const Tensor& net_out, const ModelConfig& cfg);

/// Adjoint of select_outputs: scatters [N,6,8,H,W] back to [N,16*8,H,W],
/// zero everywhere else.
Tensor select_outputs_backward(const Tensor& grad_sel, const ModelConfig& cfg);

/// Closed-form trainable parameter count of the configured model.
size_t model_param_count(const ModelConfig& cfg);

}  // namespace sedenet
