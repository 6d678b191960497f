#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "afenet/fdm.hpp"
#include "afenet/layers.hpp"

namespace afenet {

/// up4(low), up2(mid) and high concatenated (3C channels) and projected to
/// C by a 1x1 convolution with bias.
class BandMerge {
 public:
  BandMerge() = default;
  BandMerge(ParamStore& store, const std::string& prefix, std::int64_t channels, Rng& rng);

  Var operator()(const BandSet& bands) const;

  Conv2d proj;
};

/// Channel-split multi-scale block.
///
///   y      = LN(x), split into `splits` channel groups
///   g_0    = dw_0(y_0)
///   g_i    = up(dw_i(down(y_i, s_{i-1})))        i >= 1, bilinear both ways
///   p_s    = up(adaptive_max_pool(y, H/s, W/s))  for every s in scales
///   out    = GELU(fuse(concat(g_0..g_{k-1}, p_*))) + x
///
/// Down-sampled sizes are clamped to at least 1 pixel. `fuse` maps
/// C + C * |scales| channels back to C and is zero-initialised when
/// residual zero-init is on.
class FamBlock {
 public:
  FamBlock() = default;
  FamBlock(ParamStore& store, const std::string& prefix, std::int64_t channels, std::int64_t splits,
           std::vector<std::int64_t> scales, bool zero_init_residual, Rng& rng);

  Var operator()(const Var& x) const;

  /// The channel groups of y, in order.
  std::vector<Var> split(const Var& y) const;
  /// g_0 .. g_{k-1} for a normalized input y.
  std::vector<Var> branches(const Var& y) const;

  LayerNorm norm;
  std::vector<DepthwiseConv2d> dwconvs;
  Conv2d fuse;
  std::int64_t channels = 0;
  std::int64_t splits = 1;
  std::vector<std::int64_t> scales;
};

/// Band merge followed by `depth` FAM blocks.
class FrequencyAggregation {
 public:
  FrequencyAggregation() = default;
  FrequencyAggregation(ParamStore& store, const std::string& prefix, std::int64_t channels,
                       std::int64_t splits, const std::vector<std::int64_t>& scales,
                       std::int64_t depth, bool zero_init_residual, Rng& rng);

  Var operator()(const BandSet& bands) const;
  /// The FAM blocks alone, for a single full-resolution stream.
  Var refine(const Var& x) const;

  BandMerge merge;
  std::vector<FamBlock> blocks;
};

}  // namespace afenet
