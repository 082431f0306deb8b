#include "sedenet/layers.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "conv_detail.hpp"

namespace sedenet {
namespace {

using detail::ConstMatMap;
using detail::ConvDims;
using detail::MatMap;

constexpr size_t kComp = ComponentLayout::kComponents;

// Scatter maps derived from the table: for input component c, the result of
// bank m lands on output component row_for[m][c] with sign sign_for[m][c].
struct TableMaps {
  int row_for[kComp][kComp];
  float sign_for[kComp][kComp];
};

const TableMaps& table_maps() {
  static const TableMaps maps = [] {
    TableMaps m{};
    const SignedIndexTable& t = sedenion_table();
    for (int c = 0; c < 16; ++c) {
      for (int r = 0; r < 16; ++r) {
        m.row_for[t.index(r, c)][c] = r;
        m.sign_for[t.index(r, c)][c] = static_cast<float>(t.sign(r, c));
      }
    }
    return m;
  }();
  return maps;
}

ConvDims hx_dims(const Tensor& input, const HxConvSpec& spec) {
  ConvDims d;
  d.ci = spec.comp_in;
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

void check_hx_input(const Tensor& input, const HxConvSpec& spec) {
  if (input.rank() != 4) throw std::invalid_argument("hxconv input must be [N,C,H,W]");
  if (input.dim(1) % kComp != 0) {
    throw std::invalid_argument("hxconv input channels not divisible by 16");
  }
  if (input.dim(1) != kComp * spec.comp_in) {
    throw std::invalid_argument("hxconv input layout mismatch: expected 16*" +
                                std::to_string(spec.comp_in) + " channels, got " +
                                std::to_string(input.dim(1)));
  }
}

}  // namespace

const SignedIndexTable& sedenion_table() {
  static const SignedIndexTable table = SignedIndexTable::cayley_dickson(16);
  return table;
}

HxConvLayer::HxConvLayer(const HxConvSpec& spec, Prng& rng, HxInit scheme) : spec_(spec) {
  if (spec.comp_in == 0 || spec.comp_out == 0) {
    throw std::invalid_argument("hxconv needs positive channel counts");
  }
  banks_ = Tensor({kComp, spec.comp_out, spec.comp_in, spec.kernel_h, spec.kernel_w});
  grad_banks_ = Tensor(banks_.shape());
  if (scheme == HxInit::kGlorotUniform) {
    const double fan_in = 16.0 * spec.comp_in * spec.kernel_h * spec.kernel_w;
    const double fan_out = 16.0 * spec.comp_out * spec.kernel_h * spec.kernel_w;
    const float bound = static_cast<float>(std::sqrt(6.0 / (fan_in + fan_out)));
    for (size_t i = 0; i < banks_.size(); ++i) {
      banks_[i] = rng.uniform_float(-bound, bound);
    }
  }
  if (spec.bias) {
    bias_ = Tensor({kComp * spec.comp_out});
    grad_bias_ = Tensor(bias_.shape());
  }
}

Tensor HxConvLayer::forward(const Tensor& input) const {
  check_hx_input(input, spec_);
  const ConvDims d = hx_dims(input, spec_);
  const TableMaps& maps = table_maps();
  const size_t n = input.dim(0), ci = spec_.comp_in, co = spec_.comp_out;
  const size_t ohow = d.oh * d.ow;

  Tensor out({n, kComp * co, d.oh, d.ow});
  std::vector<float> col(d.col_rows() * ohow);
  std::vector<float> tmp(kComp * co * ohow);
  // banks [16,Co,Ci,kh,kw] viewed as one [16*Co, Ci*kh*kw] matrix, so a
  // single product yields all 16 per-bank convolutions of component c.
  ConstMatMap banks_mat(banks_.data(), static_cast<Eigen::Index>(kComp * co),
                        static_cast<Eigen::Index>(d.col_rows()));
  for (size_t i = 0; i < n; ++i) {
    for (size_t c = 0; c < kComp; ++c) {
      const float* comp = input.data() + ((i * kComp + c) * ci) * d.h * d.w;
      detail::im2col(comp, d, col.data());
      ConstMatMap col_mat(col.data(), static_cast<Eigen::Index>(d.col_rows()),
                          static_cast<Eigen::Index>(ohow));
      MatMap tmp_mat(tmp.data(), static_cast<Eigen::Index>(kComp * co),
                     static_cast<Eigen::Index>(ohow));
      tmp_mat.noalias() = banks_mat * col_mat;
      for (size_t m = 0; m < kComp; ++m) {
        const int r = maps.row_for[m][c];
        const float s = maps.sign_for[m][c];
        const float* src = tmp.data() + m * co * ohow;
        float* dst = out.data() + ((i * kComp + static_cast<size_t>(r)) * co) * ohow;
        for (size_t k = 0; k < co * ohow; ++k) dst[k] += s * src[k];
      }
    }
  }
  if (spec_.bias) add_channel_bias(out, bias_);
  return out;
}

Tensor HxConvLayer::backward(const Tensor& input, const Tensor& grad_out) {
  check_hx_input(input, spec_);
  const ConvDims d = hx_dims(input, spec_);
  const TableMaps& maps = table_maps();
  const size_t n = input.dim(0), ci = spec_.comp_in, co = spec_.comp_out;
  const size_t ohow = d.oh * d.ow;
  if (grad_out.rank() != 4 || grad_out.dim(0) != n ||
      grad_out.dim(1) != kComp * co || grad_out.dim(2) != d.oh ||
      grad_out.dim(3) != d.ow) {
    throw std::invalid_argument("hxconv backward grad_out shape mismatch");
  }

  Tensor grad_input(input.shape());
  std::vector<float> col(d.col_rows() * ohow);
  std::vector<float> col_grad(d.col_rows() * ohow);
  std::vector<float> gperm(kComp * co * ohow);
  ConstMatMap banks_mat(banks_.data(), static_cast<Eigen::Index>(kComp * co),
                        static_cast<Eigen::Index>(d.col_rows()));
  MatMap gbanks_mat(grad_banks_.data(), static_cast<Eigen::Index>(kComp * co),
                    static_cast<Eigen::Index>(d.col_rows()));
  for (size_t i = 0; i < n; ++i) {
    for (size_t c = 0; c < kComp; ++c) {
      // Reorder grad_out components by bank index so both the bank-gradient
      // and input-gradient products line up with the stacked banks matrix.
      for (size_t m = 0; m < kComp; ++m) {
        const int r = maps.row_for[m][c];
        const float s = maps.sign_for[m][c];
        const float* src =
            grad_out.data() + ((i * kComp + static_cast<size_t>(r)) * co) * ohow;
        float* dst = gperm.data() + m * co * ohow;
        for (size_t k = 0; k < co * ohow; ++k) dst[k] = s * src[k];
      }
      const float* comp = input.data() + ((i * kComp + c) * ci) * d.h * d.w;
      detail::im2col(comp, d, col.data());
      ConstMatMap col_mat(col.data(), static_cast<Eigen::Index>(d.col_rows()),
                          static_cast<Eigen::Index>(ohow));
      ConstMatMap g_mat(gperm.data(), static_cast<Eigen::Index>(kComp * co),
                        static_cast<Eigen::Index>(ohow));
      gbanks_mat.noalias() += g_mat * col_mat.transpose();

      MatMap cg_mat(col_grad.data(), static_cast<Eigen::Index>(d.col_rows()),
                    static_cast<Eigen::Index>(ohow));
      cg_mat.noalias() = banks_mat.transpose() * g_mat;
      detail::col2im_add(col_grad.data(), d,
                         grad_input.data() + ((i * kComp + c) * ci) * d.h * d.w);
    }
  }
  if (spec_.bias) {
    const Tensor gb = channel_bias_grad(grad_out);
    for (size_t k = 0; k < gb.size(); ++k) grad_bias_[k] += gb[k];
  }
  return grad_input;
}

void HxConvLayer::zero_grad() {
  grad_banks_.fill(0.0f);
  if (spec_.bias) grad_bias_.fill(0.0f);
}

Tensor HxConvLayer::block_weight() const {
  const SignedIndexTable& t = sedenion_table();
  const size_t ci = spec_.comp_in, co = spec_.comp_out;
  const size_t khw = spec_.kernel_h * spec_.kernel_w;
  Tensor big({kComp * co, kComp * ci, spec_.kernel_h, spec_.kernel_w});
  for (size_t r = 0; r < kComp; ++r) {
    for (size_t c = 0; c < kComp; ++c) {
      const size_t m = static_cast<size_t>(t.index(static_cast<int>(r), static_cast<int>(c)));
      const float s = static_cast<float>(t.sign(static_cast<int>(r), static_cast<int>(c)));
      for (size_t o = 0; o < co; ++o) {
        for (size_t ii = 0; ii < ci; ++ii) {
          const float* src = banks_.data() + (((m * co + o) * ci + ii)) * khw;
          float* dst = big.data() + (((r * co + o) * (kComp * ci)) + c * ci + ii) * khw;
          for (size_t k = 0; k < khw; ++k) dst[k] = s * src[k];
        }
      }
    }
  }
  return big;
}

size_t HxConvLayer::param_count(const HxConvSpec& spec) {
  size_t count = kComp * spec.comp_out * spec.comp_in * spec.kernel_h * spec.kernel_w;
  if (spec.bias) count += kComp * spec.comp_out;
  return count;
}

}  // namespace sedenet
