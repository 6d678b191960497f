#include "afenet/layers.hpp"

namespace afenet {

Conv2d::Conv2d(ParamStore& store, const std::string& name, std::int64_t in_channels,
               std::int64_t out_channels, int kernel, int stride_, bool with_bias, Rng& rng)
    : stride(stride_) {
  const std::int64_t fan_in = in_channels * kernel * kernel;
  weight = store.add(name + ".weight",
                     uniform_fan_in(Shape{out_channels, in_channels, kernel, kernel}, fan_in, rng));
  if (with_bias) {
    bias = store.add(name + ".bias", uniform_fan_in(Shape{out_channels, 1, 1, 1}, fan_in, rng));
  }
}

void Conv2d::zero() {
  weight.mutable_value().fill(0.0);
  if (bias.defined()) bias.mutable_value().fill(0.0);
}

DepthwiseConv2d::DepthwiseConv2d(ParamStore& store, const std::string& name,
                                 std::int64_t channels, int kernel, bool with_bias, Rng& rng) {
  const std::int64_t fan_in = kernel * kernel;
  weight = store.add(name + ".weight",
                     uniform_fan_in(Shape{channels, 1, kernel, kernel}, fan_in, rng));
  if (with_bias) {
    bias = store.add(name + ".bias", uniform_fan_in(Shape{channels, 1, 1, 1}, fan_in, rng));
  }
}

LayerNorm::LayerNorm(ParamStore& store, const std::string& name, std::int64_t channels) {
  gain = store.add(name + ".gain", Tensor(Shape{channels, 1, 1, 1}, 1.0));
  offset = store.add(name + ".offset", Tensor(Shape{channels, 1, 1, 1}, 0.0));
}

}  // namespace afenet
