#pragma once

// im2col/col2im plumbing shared by the real conv2d kernels and the sedenion
// convolution layer. Internal to the library.

#include <Eigen/Core>
#include <cstddef>

namespace sedenet::detail {

using RowMat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMat>;
using ConstMatMap = Eigen::Map<const RowMat>;

struct ConvDims {
  size_t ci, kh, kw, stride, pad;
  size_t h, w;       // input spatial
  size_t oh, ow;     // output spatial
  size_t col_rows() const { return ci * kh * kw; }
  size_t col_cols() const { return oh * ow; }
};

// src: one sample, [ci, h, w] contiguous. dst: [ci*kh*kw, oh*ow] row-major.
inline void im2col(const float* src, const ConvDims& d, float* dst) {
  const ptrdiff_t pad = static_cast<ptrdiff_t>(d.pad);
  for (size_t c = 0; c < d.ci; ++c) {
    const float* plane = src + c * d.h * d.w;
    for (size_t ky = 0; ky < d.kh; ++ky) {
      for (size_t kx = 0; kx < d.kw; ++kx) {
        float* row = dst + ((c * d.kh + ky) * d.kw + kx) * d.col_cols();
        for (size_t oy = 0; oy < d.oh; ++oy) {
          const ptrdiff_t iy =
              static_cast<ptrdiff_t>(oy * d.stride + ky) - pad;
          float* out = row + oy * d.ow;
          if (iy < 0 || iy >= static_cast<ptrdiff_t>(d.h)) {
            std::fill(out, out + d.ow, 0.0f);
            continue;
          }
          const float* in_row = plane + static_cast<size_t>(iy) * d.w;
          for (size_t ox = 0; ox < d.ow; ++ox) {
            const ptrdiff_t ix =
                static_cast<ptrdiff_t>(ox * d.stride + kx) - pad;
            out[ox] = (ix < 0 || ix >= static_cast<ptrdiff_t>(d.w))
                          ? 0.0f
                          : in_row[static_cast<size_t>(ix)];
          }
        }
      }
    }
  }
}

// Adjoint of im2col: scatter-adds the column matrix back onto one sample.
inline void col2im_add(const float* col, const ConvDims& d, float* dst) {
  const ptrdiff_t pad = static_cast<ptrdiff_t>(d.pad);
  for (size_t c = 0; c < d.ci; ++c) {
    float* plane = dst + c * d.h * d.w;
    for (size_t ky = 0; ky < d.kh; ++ky) {
      for (size_t kx = 0; kx < d.kw; ++kx) {
        const float* row = col + ((c * d.kh + ky) * d.kw + kx) * d.col_cols();
        for (size_t oy = 0; oy < d.oh; ++oy) {
          const ptrdiff_t iy =
              static_cast<ptrdiff_t>(oy * d.stride + ky) - pad;
          if (iy < 0 || iy >= static_cast<ptrdiff_t>(d.h)) continue;
          float* out_row = plane + static_cast<size_t>(iy) * d.w;
          const float* in = row + oy * d.ow;
          for (size_t ox = 0; ox < d.ow; ++ox) {
            const ptrdiff_t ix =
                static_cast<ptrdiff_t>(ox * d.stride + kx) - pad;
            if (ix < 0 || ix >= static_cast<ptrdiff_t>(d.w)) continue;
            out_row[static_cast<size_t>(ix)] += in[ox];
          }
        }
      }
    }
  }
}

}  // namespace sedenet::detail
