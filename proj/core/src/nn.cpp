#include "sedenet/nn.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "conv_detail.hpp"

namespace sedenet {
namespace {

using detail::ConstMatMap;
using detail::ConvDims;
using detail::MatMap;

void check_conv_args(const Tensor& input, const Tensor& weight,
                     const Conv2dSpec& spec) {
  if (input.rank() != 4) throw std::invalid_argument("conv2d input must be [N,C,H,W]");
  if (weight.rank() != 4) throw std::invalid_argument("conv2d weight must be [Co,Ci,kh,kw]");
  if (spec.stride < 1) throw std::invalid_argument("conv2d stride must be >= 1");
  if (input.dim(1) != spec.in_channels || weight.dim(1) != spec.in_channels ||
      weight.dim(0) != spec.out_channels || weight.dim(2) != spec.kernel_h ||
      weight.dim(3) != spec.kernel_w) {
    throw std::invalid_argument("conv2d shapes inconsistent with spec");
  }
}

ConvDims conv_dims(const Tensor& input, const Conv2dSpec& spec) {
  ConvDims d;
  d.ci = spec.in_channels;
  d.kh = spec.kernel_h;
  d.kw = spec.kernel_w;
  d.stride = spec.stride;
  d.pad = spec.padding;
  d.h = input.dim(2);
  d.w = input.dim(3);
  d.oh = conv_out_extent(d.h, d.kh, d.stride, d.pad);
  d.ow = conv_out_extent(d.w, d.kw, d.stride, d.pad);
  return d;
}

}  // namespace

size_t conv_out_extent(size_t in, size_t kernel, size_t stride, size_t padding) {
  const size_t padded = in + 2 * padding;
  if (padded < kernel) throw std::invalid_argument("conv2d output would be empty");
  return (padded - kernel) / stride + 1;
}

Tensor conv2d(const Tensor& input, const Tensor& weight, const Conv2dSpec& spec) {
  check_conv_args(input, weight, spec);
  const ConvDims d = conv_dims(input, spec);
  const size_t n = input.dim(0), co = spec.out_channels;

  Tensor out({n, co, d.oh, d.ow});
  std::vector<float> col(d.col_rows() * d.col_cols());
  ConstMatMap w_mat(weight.data(), static_cast<Eigen::Index>(co),
                    static_cast<Eigen::Index>(d.col_rows()));
  for (size_t i = 0; i < n; ++i) {
    detail::im2col(input.data() + i * d.ci * d.h * d.w, d, col.data());
    ConstMatMap col_mat(col.data(), static_cast<Eigen::Index>(d.col_rows()),
                        static_cast<Eigen::Index>(d.col_cols()));
    MatMap out_mat(out.data() + i * co * d.oh * d.ow,
                   static_cast<Eigen::Index>(co),
                   static_cast<Eigen::Index>(d.col_cols()));
    out_mat.noalias() = w_mat * col_mat;
  }
  return out;
}

Conv2dGrads conv2d_backward(const Tensor& input, const Tensor& weight,
                            const Tensor& grad_out, const Conv2dSpec& spec) {
  check_conv_args(input, weight, spec);
  const ConvDims d = conv_dims(input, spec);
  const size_t n = input.dim(0), co = spec.out_channels;
  if (grad_out.rank() != 4 || grad_out.dim(0) != n || grad_out.dim(1) != co ||
      grad_out.dim(2) != d.oh || grad_out.dim(3) != d.ow) {
    throw std::invalid_argument("conv2d_backward grad_out shape mismatch");
  }

  Conv2dGrads g{Tensor(input.shape()), Tensor(weight.shape())};
  std::vector<float> col(d.col_rows() * d.col_cols());
  std::vector<float> col_grad(d.col_rows() * d.col_cols());
  ConstMatMap w_mat(weight.data(), static_cast<Eigen::Index>(co),
                    static_cast<Eigen::Index>(d.col_rows()));
  MatMap gw_mat(g.grad_weight.data(), static_cast<Eigen::Index>(co),
                static_cast<Eigen::Index>(d.col_rows()));
  for (size_t i = 0; i < n; ++i) {
    detail::im2col(input.data() + i * d.ci * d.h * d.w, d, col.data());
    ConstMatMap col_mat(col.data(), static_cast<Eigen::Index>(d.col_rows()),
                        static_cast<Eigen::Index>(d.col_cols()));
    ConstMatMap go_mat(grad_out.data() + i * co * d.oh * d.ow,
                       static_cast<Eigen::Index>(co),
                       static_cast<Eigen::Index>(d.col_cols()));
    gw_mat.noalias() += go_mat * col_mat.transpose();

    MatMap cg_mat(col_grad.data(), static_cast<Eigen::Index>(d.col_rows()),
                  static_cast<Eigen::Index>(d.col_cols()));
    cg_mat.noalias() = w_mat.transpose() * go_mat;
    detail::col2im_add(col_grad.data(), d, g.grad_input.data() + i * d.ci * d.h * d.w);
  }
  return g;
}

void add_channel_bias(Tensor& x, const Tensor& bias) {
  if (x.rank() != 4 || bias.rank() != 1 || bias.dim(0) != x.dim(1)) {
    throw std::invalid_argument("bias length must match channel count");
  }
  const size_t n = x.dim(0), c = x.dim(1), hw = x.dim(2) * x.dim(3);
  for (size_t i = 0; i < n; ++i) {
    for (size_t ch = 0; ch < c; ++ch) {
      float* p = x.data() + (i * c + ch) * hw;
      const float b = bias[ch];
      for (size_t k = 0; k < hw; ++k) p[k] += b;
    }
  }
}

Tensor channel_bias_grad(const Tensor& grad_out) {
  if (grad_out.rank() != 4) throw std::invalid_argument("bias grad expects [N,C,H,W]");
  const size_t n = grad_out.dim(0), c = grad_out.dim(1),
               hw = grad_out.dim(2) * grad_out.dim(3);
  Tensor g({c});
  for (size_t ch = 0; ch < c; ++ch) {
    double acc = 0.0;
    for (size_t i = 0; i < n; ++i) {
      const float* p = grad_out.data() + (i * c + ch) * hw;
      for (size_t k = 0; k < hw; ++k) acc += p[k];
    }
    g[ch] = static_cast<float>(acc);
  }
  return g;
}

Tensor batchnorm_forward(const Tensor& input, const Tensor& gamma,
                         const Tensor& beta, Tensor& running_mean,
                         Tensor& running_var, BnMode mode, float momentum,
                         float eps, BnCache* cache) {
  if (eps <= 0.0f) throw std::invalid_argument("batchnorm eps must be positive");
  if (input.rank() != 4) throw std::invalid_argument("batchnorm input must be [N,C,H,W]");
  const size_t n = input.dim(0), c = input.dim(1), hw = input.dim(2) * input.dim(3);
  if (gamma.size() != c || beta.size() != c || running_mean.size() != c ||
      running_var.size() != c) {
    throw std::invalid_argument("batchnorm parameter length must match channels");
  }

  Tensor out(input.shape());
  if (cache) {
    cache->valid = false;
    if (mode == BnMode::kTrain) {
      cache->x_hat = Tensor(input.shape());
      cache->inv_std.assign(c, 0.0f);
      cache->gamma.assign(gamma.data(), gamma.data() + c);
    }
  }

  const double m_count = static_cast<double>(n * hw);
  for (size_t ch = 0; ch < c; ++ch) {
    float mean, inv_std;
    if (mode == BnMode::kTrain) {
      double sum = 0.0, sum_sq = 0.0;
      for (size_t i = 0; i < n; ++i) {
        const float* p = input.data() + (i * c + ch) * hw;
        for (size_t k = 0; k < hw; ++k) {
          sum += p[k];
          sum_sq += static_cast<double>(p[k]) * p[k];
        }
      }
      const double mu = sum / m_count;
      const double var = sum_sq / m_count - mu * mu;
      mean = static_cast<float>(mu);
      inv_std = static_cast<float>(1.0 / std::sqrt(var + eps));
      running_mean[ch] = (1.0f - momentum) * running_mean[ch] + momentum * mean;
      running_var[ch] =
          (1.0f - momentum) * running_var[ch] + momentum * static_cast<float>(var);
    } else {
      mean = running_mean[ch];
      inv_std = 1.0f / std::sqrt(running_var[ch] + eps);
    }

    const float g = gamma[ch], b = beta[ch];
    for (size_t i = 0; i < n; ++i) {
      const float* p = input.data() + (i * c + ch) * hw;
      float* q = out.data() + (i * c + ch) * hw;
      float* xh = (cache && mode == BnMode::kTrain)
                      ? cache->x_hat.data() + (i * c + ch) * hw
                      : nullptr;
      for (size_t k = 0; k < hw; ++k) {
        const float x_hat = (p[k] - mean) * inv_std;
        if (xh) xh[k] = x_hat;
        q[k] = g * x_hat + b;
      }
    }
    if (cache && mode == BnMode::kTrain) cache->inv_std[ch] = inv_std;
  }
  if (cache && mode == BnMode::kTrain) cache->valid = true;
  return out;
}

BnGrads batchnorm_backward(const BnCache& cache, const Tensor& grad_out) {
  if (!cache.valid) throw std::invalid_argument("batchnorm cache is stale or eval-mode");
  if (!cache.x_hat.same_shape(grad_out)) {
    throw std::invalid_argument("batchnorm cache/grad_out shape mismatch");
  }
  const size_t n = grad_out.dim(0), c = grad_out.dim(1),
               hw = grad_out.dim(2) * grad_out.dim(3);
  const double m_count = static_cast<double>(n * hw);

  BnGrads g{Tensor(grad_out.shape()), Tensor({c}), Tensor({c})};
  for (size_t ch = 0; ch < c; ++ch) {
    double sum_g = 0.0, sum_gx = 0.0;
    for (size_t i = 0; i < n; ++i) {
      const float* go = grad_out.data() + (i * c + ch) * hw;
      const float* xh = cache.x_hat.data() + (i * c + ch) * hw;
      for (size_t k = 0; k < hw; ++k) {
        sum_g += go[k];
        sum_gx += static_cast<double>(go[k]) * xh[k];
      }
    }
    g.grad_beta[ch] = static_cast<float>(sum_g);
    g.grad_gamma[ch] = static_cast<float>(sum_gx);

    const float scale = cache.gamma[ch] * cache.inv_std[ch];
    const float mean_g = static_cast<float>(sum_g / m_count);
    const float mean_gx = static_cast<float>(sum_gx / m_count);
    for (size_t i = 0; i < n; ++i) {
      const float* go = grad_out.data() + (i * c + ch) * hw;
      const float* xh = cache.x_hat.data() + (i * c + ch) * hw;
      float* gi = g.grad_input.data() + (i * c + ch) * hw;
      for (size_t k = 0; k < hw; ++k) {
        gi[k] = scale * (go[k] - mean_g - xh[k] * mean_gx);
      }
    }
  }
  return g;
}

Tensor relu(const Tensor& input) {
  Tensor out(input.shape());
  for (size_t i = 0; i < input.size(); ++i) {
    out[i] = input[i] > 0.0f ? input[i] : 0.0f;
  }
  return out;
}

Tensor relu_backward(const Tensor& input, const Tensor& grad_out) {
  if (!input.same_shape(grad_out)) {
    throw std::invalid_argument("relu_backward shape mismatch");
  }
  Tensor g(input.shape());
  for (size_t i = 0; i < input.size(); ++i) {
    g[i] = input[i] > 0.0f ? grad_out[i] : 0.0f;
  }
  return g;
}

Tensor upsample2x(const Tensor& input) {
  if (input.rank() != 4) throw std::invalid_argument("upsample2x input must be [N,C,H,W]");
  const size_t n = input.dim(0), c = input.dim(1), h = input.dim(2), w = input.dim(3);
  Tensor out({n, c, 2 * h, 2 * w});
  for (size_t i = 0; i < n * c; ++i) {
    const float* src = input.data() + i * h * w;
    float* dst = out.data() + i * 4 * h * w;
    for (size_t y = 0; y < h; ++y) {
      for (size_t x = 0; x < w; ++x) {
        const float v = src[y * w + x];
        float* d = dst + (2 * y) * 2 * w + 2 * x;
        d[0] = v;
        d[1] = v;
        d[2 * w] = v;
        d[2 * w + 1] = v;
      }
    }
  }
  return out;
}

Tensor upsample2x_backward(const Tensor& grad_out) {
  if (grad_out.rank() != 4 || grad_out.dim(2) % 2 != 0 || grad_out.dim(3) % 2 != 0) {
    throw std::invalid_argument("upsample2x_backward expects even spatial dims");
  }
  const size_t n = grad_out.dim(0), c = grad_out.dim(1), h2 = grad_out.dim(2),
               w2 = grad_out.dim(3);
  Tensor g({n, c, h2 / 2, w2 / 2});
  for (size_t i = 0; i < n * c; ++i) {
    const float* src = grad_out.data() + i * h2 * w2;
    float* dst = g.data() + i * (h2 / 2) * (w2 / 2);
    for (size_t y = 0; y < h2 / 2; ++y) {
      for (size_t x = 0; x < w2 / 2; ++x) {
        const float* s = src + (2 * y) * w2 + 2 * x;
        dst[y * (w2 / 2) + x] = s[0] + s[1] + s[w2] + s[w2 + 1];
      }
    }
  }
  return g;
}

}  // namespace sedenet
