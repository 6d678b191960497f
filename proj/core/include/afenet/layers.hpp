#pragma once

#include <cstdint>
#include <string>

#include "afenet/ops.hpp"
#include "afenet/param_store.hpp"

namespace afenet {

/// Dense convolution bound to parameters "<name>.weight" and "<name>.bias".
class Conv2d {
 public:
  Conv2d() = default;
  Conv2d(ParamStore& store, const std::string& name, std::int64_t in_channels,
         std::int64_t out_channels, int kernel, int stride, bool with_bias, Rng& rng);

  Var operator()(const Var& x) const { return ops::conv2d(x, weight, bias, stride); }

  /// Zero weight and bias (the layer then outputs zeros).
  void zero();

  Var weight;
  Var bias;
  int stride = 1;
};

/// Per-channel k x k convolution.
class DepthwiseConv2d {
 public:
  DepthwiseConv2d() = default;
  DepthwiseConv2d(ParamStore& store, const std::string& name, std::int64_t channels,
                  int kernel, bool with_bias, Rng& rng);

  Var operator()(const Var& x) const { return ops::depthwise_conv2d(x, weight, bias, 1); }

  Var weight;
  Var bias;
};

/// Channel layer normalization with per-channel gain (init 1) and offset (init 0).
class LayerNorm {
 public:
  LayerNorm() = default;
  LayerNorm(ParamStore& store, const std::string& name, std::int64_t channels);

  Var operator()(const Var& x) const { return ops::layer_norm(x, gain, offset); }

  Var gain;
  Var offset;
};

}  // namespace afenet
