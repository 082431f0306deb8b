#pragma once

#include <cstddef>

#include "sedenet/tensor.hpp"

namespace sedenet {

struct Conv2dSpec {
  size_t in_channels = 0;
  size_t out_channels = 0;
  size_t kernel_h = 1;
  size_t kernel_w = 1;
  size_t stride = 1;
  size_t padding = 0;
};

/// floor((in + 2*padding - kernel) / stride) + 1; throws when empty.
size_t conv_out_extent(size_t in, size_t kernel, size_t stride, size_t padding);

/// Cross-correlation with zero padding.
/// input [N,Ci,H,W], weight [Co,Ci,kh,kw] -> [N,Co,H',W'].
Tensor conv2d(const Tensor& input, const Tensor& weight, const Conv2dSpec& spec);

struct Conv2dGrads {
  Tensor grad_input;
  Tensor grad_weight;
};

Conv2dGrads conv2d_backward(const Tensor& input, const Tensor& weight,
                            const Tensor& grad_out, const Conv2dSpec& spec);

/// Adds a per-channel bias [C] to x [N,C,H,W].
void add_channel_bias(Tensor& x, const Tensor& bias);

/// Gradient of a per-channel bias: sum of grad_out over N,H,W -> [C].
Tensor channel_bias_grad(const Tensor& grad_out);

enum class BnMode { kTrain, kEval };

struct BnCache {
  bool valid = false;
  Tensor x_hat;                 // normalized input, same shape as input
  std::vector<float> inv_std;   // per channel
  std::vector<float> gamma;     // snapshot taken at forward time
};

/// Per-channel batch normalization over the N,H,W axes of [N,C,H,W].
/// Train mode normalizes by batch statistics and folds them into the running
/// stats with the given momentum; eval mode normalizes by the running stats.
/// `cache` may be null when no backward pass will follow.
Tensor batchnorm_forward(const Tensor& input, const Tensor& gamma,
                         const Tensor& beta, Tensor& running_mean,
                         Tensor& running_var, BnMode mode, float momentum,
                         float eps, BnCache* cache);

struct BnGrads {
  Tensor grad_input;
  Tensor grad_gamma;
  Tensor grad_beta;
};

/// Backward of a train-mode batchnorm_forward call that filled `cache`.
BnGrads batchnorm_backward(const BnCache& cache, const Tensor& grad_out);

Tensor relu(const Tensor& input);
/// Passes gradient where input > 0; the tie at exactly 0 passes nothing.
Tensor relu_backward(const Tensor& input, const Tensor& grad_out);

/// Nearest-neighbor doubling [N,C,H,W] -> [N,C,2H,2W].
Tensor upsample2x(const Tensor& input);
/// Adjoint: sums each 2x2 fan-out back onto its source cell.
Tensor upsample2x_backward(const Tensor& grad_out);

}  // namespace sedenet
