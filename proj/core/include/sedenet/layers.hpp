#pragma once

#include <cstddef>

#include "sedenet/algebra.hpp"
#include "sedenet/nn.hpp"
#include "sedenet/prng.hpp"
#include "sedenet/tensor.hpp"

namespace sedenet {

/// Canonical channel layout for hypercomplex feature maps: 16 contiguous
/// channel blocks, block k holding component k.
struct ComponentLayout {
  static constexpr size_t kComponents = 16;
  size_t per_component_channels = 0;

  size_t total_channels() const { return kComponents * per_component_channels; }
  size_t component_offset(size_t k) const { return k * per_component_channels; }
};

/// The shared dimension-16 multiplication table (built once, immutable).
const SignedIndexTable& sedenion_table();

struct HxConvSpec {
  size_t comp_in = 0;   // channels per component on the input side
  size_t comp_out = 0;  // channels per component on the output side
  size_t kernel_h = 3;
  size_t kernel_w = 3;
  size_t stride = 1;
  size_t padding = 1;
  bool bias = false;
};

enum class HxInit {
  kGlorotUniform,  // uniform(-b, b), b = sqrt(6 / (fan_in + fan_out))
  kZero,           // regression heads start from the zero map
};

/// Sedenion convolution: 16 real kernel banks w_0..w_15, each [Co,Ci,kh,kw],
/// combined by the signed index table. Output component r is
///
///   out_r = sum_c sign(r,c) * conv2d(in_c, bank_index(r,c))  (+ bias slice r)
///
/// so every bank is re-used 16 times and the layer costs 1/16 of the
/// parameters of a real convolution over the same 16*Ci -> 16*Co channels.
class HxConvLayer {
 public:
  HxConvLayer() = default;

  /// Glorot fans count the 16-fold combination: fan_in = 16*Ci*kh*kw,
  /// fan_out = 16*Co*kh*kw. Bias starts at zero under either scheme.
  HxConvLayer(const HxConvSpec& spec, Prng& rng,
              HxInit scheme = HxInit::kGlorotUniform);

  /// input [N, 16*Ci, H, W] -> [N, 16*Co, H', W']. Pure; safe to call
  /// concurrently on frozen weights.
  Tensor forward(const Tensor& input) const;

  /// Accumulates bank/bias gradients and returns the input gradient.
  /// `input` must be the tensor the matching forward saw.
  Tensor backward(const Tensor& input, const Tensor& grad_out);

  void zero_grad();

  /// The real-convolution weight this layer is equivalent to:
  /// [16*Co, 16*Ci, kh, kw] with block (r,c) = sign(r,c) * bank_index(r,c).
  Tensor block_weight() const;

  static size_t param_count(const HxConvSpec& spec);
  size_t param_count() const { return param_count(spec_); }

  const HxConvSpec& spec() const { return spec_; }
  Tensor& banks() { return banks_; }              // [16, Co, Ci, kh, kw]
  const Tensor& banks() const { return banks_; }
  Tensor& bias() { return bias_; }                // [16*Co] when enabled
  const Tensor& bias() const { return bias_; }
  Tensor& grad_banks() { return grad_banks_; }
  const Tensor& grad_banks() const { return grad_banks_; }
  Tensor& grad_bias() { return grad_bias_; }
  bool has_bias() const { return spec_.bias; }

 private:
  HxConvSpec spec_;
  Tensor banks_;
  Tensor bias_;
  Tensor grad_banks_;
  Tensor grad_bias_;
};

}  // namespace sedenet
