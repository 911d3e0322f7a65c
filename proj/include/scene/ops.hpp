#pragma once

#include "scene/tensor.hpp"

namespace scene::ops {

// Zero-padded direct convolution, stride >= 1, arbitrary (kh, kw).
// weight shape: (c_out, c_in, kh, kw); bias length c_out (empty = no bias).
// Summation order over (c_in, kh, kw) is fixed, so results are deterministic
// for a given configuration. 1x1 stride-1 convs dispatch to an Eigen GEMM.
Tensor conv2d_forward(const Tensor& x, const Tensor& w, std::span<const double> bias,
                      std::int64_t pad_h, std::int64_t pad_w, std::int64_t stride = 1);

Tensor conv2d_backward_input(const Tensor& gout, const Tensor& w, const TensorShape& in_shape,
                             std::int64_t pad_h, std::int64_t pad_w, std::int64_t stride = 1);
Tensor conv2d_backward_weight(const Tensor& x, const Tensor& gout, const TensorShape& w_shape,
                              std::int64_t pad_h, std::int64_t pad_w, std::int64_t stride = 1);
std::vector<double> conv2d_backward_bias(const Tensor& gout);

Tensor relu(const Tensor& x);

// Space-to-depth: sub-pixel (dy, dx) of input channel c lands at output
// channel c*f*f + dy*f + dx. pixel_shuffle is its exact inverse.
Tensor pixel_unshuffle(const Tensor& x, std::int64_t factor);
Tensor pixel_shuffle(const Tensor& x, std::int64_t factor);

Tensor global_avg_pool(const Tensor& x);  // -> (n, c, 1, 1)

// 2x2 mean pooling with stride 2; trailing odd row/column is dropped.
Tensor avg_pool2(const Tensor& x);

double l1_loss(const Tensor& a, const Tensor& b);

Tensor clamp01(const Tensor& x);

double mse(const Tensor& a, const Tensor& b);
// PSNR in dB for signals in [0, 1]; +inf when a == b.
double psnr(const Tensor& a, const Tensor& b);

}  // namespace scene::ops
