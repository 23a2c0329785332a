#pragma once

#include "gdq/tensor.hpp"

#include <cstddef>
#include <span>

namespace gdq {

enum class PadMode { zeros, reflect };

struct ConvSpec {
    std::size_t stride = 1;
    std::size_t pad = 1;
    PadMode pad_mode = PadMode::reflect;
};

/// Output spatial extent of a convolution: (in + 2 pad - k) / stride + 1.
std::size_t conv_output_extent(std::size_t in, std::size_t kernel, std::size_t stride,
                               std::size_t pad);

/// Mirror index (edge not repeated) into [0, n).
std::ptrdiff_t reflect_index(std::ptrdiff_t i, std::ptrdiff_t n) noexcept;

/// Direct 2-D convolution. x: (N, Cin, H, W), w: (Cout, Cin, k, k), bias: Cout values or empty.
Tensor conv2d(const Tensor& x, const Tensor& w, std::span<const float> bias,
              const ConvSpec& spec = {});

/// Naive seven-loop convolution with double accumulation; kept as an oracle.
Tensor conv2d_reference(const Tensor& x, const Tensor& w, std::span<const float> bias,
                        const ConvSpec& spec = {});

void relu_inplace(Tensor& t) noexcept;

/// 2x2 average pool with stride 2; odd trailing rows/cols are dropped.
Tensor avg_pool2(const Tensor& x);

/// Average pool by an integer factor in both dimensions.
Tensor avg_pool(const Tensor& x, std::size_t factor);

/// Group normalisation over (C/groups, H, W) per sample with per-channel affine.
Tensor group_norm(const Tensor& x, std::size_t groups, std::span<const float> scale,
                  std::span<const float> shift, double eps = 1e-5);

/// Depth-to-space: (N, C*s*s, H, W) -> (N, C, H*s, W*s).
Tensor pixel_shuffle(const Tensor& x, std::size_t scale);

/// Bicubic upsampling (Keys kernel, a = -0.5, half-pixel centres, clamped borders).
Tensor bicubic_upsample(const Tensor& x, std::size_t scale);

} // namespace gdq
