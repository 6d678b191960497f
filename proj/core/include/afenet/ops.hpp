#pragma once

#include <cstdint>
#include <span>

#include "afenet/autograd.hpp"

/// Differentiable primitives. Every function records its own backward rule
/// when gradients are enabled; geometry conventions are fixed here:
///   * convolutions use zero padding (k - 1) / 2 with odd k, so the output is
///     ceil(H / stride) x ceil(W / stride);
///   * bilinear resampling uses half-pixel centres (align-corners disabled);
///   * adaptive max pooling uses windows [floor(i*H/out), ceil((i+1)*H/out)).
namespace afenet::ops {

Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& x, double factor);

/// Dense 2-D convolution. weight: (Cout, Cin, k, k); bias: (Cout, 1, 1, 1) or
/// undefined. stride must be 1 or 2.
Var conv2d(const Var& x, const Var& weight, const Var& bias, int stride = 1);

/// Per-channel 2-D convolution. weight: (C, 1, k, k).
Var depthwise_conv2d(const Var& x, const Var& weight, const Var& bias, int stride = 1);

Var resize_bilinear(const Var& x, std::int64_t out_h, std::int64_t out_w);

/// factor must be 2 or 4.
Var upsample_bilinear(const Var& x, int factor);

/// Normalizes the channel vector at every (batch, y, x) position.
/// gain, offset: (C, 1, 1, 1).
Var layer_norm(const Var& x, const Var& gain, const Var& offset, double eps = 1e-5);

Var gelu(const Var& x);
Var sigmoid(const Var& x);

/// Softmax along axis 2 (rows of each plane run down) or 3 (along a row).
Var softmax(const Var& x, int axis = 3);

/// x / max(||x||_2, eps) along the last axis.
Var l2_normalize(const Var& x, double eps = 1e-12);

/// Batched matrix product over the (n, c) planes: (M x K) . (K x P).
Var matmul(const Var& a, const Var& b);

/// Swap the last two axes.
Var transpose(const Var& x);

Var reshape(const Var& x, Shape shape);

/// y[n, c, ...] = x[n, c, ...] / divisor[c]; divisor: (C, 1, 1, 1).
Var divide_channels(const Var& x, const Var& divisor);

Var concat_channels(std::span<const Var> xs);
Var slice_channels(const Var& x, std::int64_t start, std::int64_t count);

Var adaptive_max_pool(const Var& x, std::int64_t out_h, std::int64_t out_w);

/// Non-overlapping k x k mean; H and W must be divisible by k.
Var avg_pool(const Var& x, int k);

/// Mean absolute error; returns a single-element tensor.
Var l1_loss(const Var& pred, const Var& target);

/// sum(x * weights) with constant weights; single-element result.
Var dot(const Var& x, const Tensor& weights);

Var sum(const Var& x);

}  // namespace afenet::ops
