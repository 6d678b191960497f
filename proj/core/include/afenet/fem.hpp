#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "afenet/fdm.hpp"
#include "afenet/layers.hpp"
#include "afenet/model_config.hpp"

namespace afenet {

/// Multi-head transposed (channel) attention.
///
/// Q, K, V come from a 1x1 convolution followed by a 3x3 depthwise
/// convolution. Per head, with K and Q viewed as C_h x HW rows,
///   A   = softmax_rows(K Q^T / alpha)      (C_h x C_h)
///   out = A^T V                            (channel j = sum_i A[i][j] v_i)
/// which is V . A in the HW x C_h orientation. The result is projected by
/// a 1x1 convolution and added to the input. alpha is one learnable scalar
/// per head (initialised to 1). With `attention_l2norm` the Q and K rows are
/// unit-normalized first, which keeps the logits bounded independent of HW.
class ChannelAttention {
 public:
  ChannelAttention() = default;
  ChannelAttention(ParamStore& store, const std::string& prefix, const FemBlockConfig& cfg,
                   bool zero_init_residual, Rng& rng);

  Var operator()(const Var& x) const;

  /// The softmax-normalized (N, heads, C_h, C_h) attention matrices.
  Var attention(const Var& x) const;

  Conv2d qkv;
  DepthwiseConv2d qkv_dw;
  Var temperature;
  Conv2d project_out;
  std::int64_t heads = 1;
  bool l2norm = true;

 private:
  struct Heads {
    Var attn;
    Var v;
  };
  Heads compute(const Var& x) const;
};

/// Gated depthwise feed-forward:
///   h        = dw(project_in(LN(x)))     (2 * hidden channels)
///   gating   = GELU(h[:hidden]) * h[hidden:]
///   out      = project_out(gating) + x
class GatedFeedForward {
 public:
  GatedFeedForward() = default;
  GatedFeedForward(ParamStore& store, const std::string& prefix, const FemBlockConfig& cfg,
                   bool zero_init_residual, Rng& rng);

  Var operator()(const Var& x) const;
  Var gating(const Var& x) const;

  LayerNorm norm;
  Conv2d project_in;
  DepthwiseConv2d dwconv;
  Conv2d project_out;
  std::int64_t hidden = 0;
};

/// One enhancement block: attention then feed-forward, both residual.
class EnhancementBlock {
 public:
  EnhancementBlock() = default;
  EnhancementBlock(ParamStore& store, const std::string& prefix, const FemBlockConfig& cfg,
                   bool zero_init_residual, Rng& rng);

  Var operator()(const Var& x) const { return ffn(attention(x)); }

  ChannelAttention attention;
  GatedFeedForward ffn;
};

/// `blocks_per_band` enhancement blocks applied in sequence.
class EnhanceBranch {
 public:
  EnhanceBranch() = default;
  EnhanceBranch(ParamStore& store, const std::string& prefix, const FemBlockConfig& cfg,
                bool zero_init_residual, Rng& rng);

  Var operator()(const Var& x) const;

  std::vector<EnhancementBlock> blocks;
};

/// Multi-scale gate:
///   z    = gate( sum_s resize(dw_s(adaptive_max_pool(x, H/s, W/s)), H, W) )
///   out  = x * 2 sigmoid(z)
/// over scales {1, 2, 4} ({1, 2} when H or W < 4). The gate convolution is
/// zero-initialised, so sigmoid(z) = 1/2 and the block starts as identity.
class PyramidAttention {
 public:
  PyramidAttention() = default;
  PyramidAttention(ParamStore& store, const std::string& prefix, std::int64_t channels,
                   bool zero_init_residual, Rng& rng);

  Var operator()(const Var& x) const;
  /// sigmoid(z), in (0, 1).
  Var gate_map(const Var& x) const;
  std::vector<std::int64_t> active_scales(const Shape& s) const;

  std::vector<std::int64_t> scales{1, 2, 4};
  std::vector<DepthwiseConv2d> scale_convs;
  Conv2d gate;
};

/// Per-band enhancement with coarse-to-fine interaction:
///   L = enhance_l(low)
///   M = PA_m(combine_m(enhance_m(mid),  up2(L)))
///   H = PA_h(combine_h(enhance_h(high), up2(M)))
/// combine is either concat + 1x1 projection or an elementwise product.
/// With interaction disabled each band is enhanced on its own and PA sees
/// only that band.
class CrossBandEnhancement {
 public:
  CrossBandEnhancement() = default;
  CrossBandEnhancement(ParamStore& store, const std::string& prefix, const FemBlockConfig& cfg,
                       CombineMode mode, bool interaction, bool zero_init_residual, Rng& rng);

  BandSet operator()(const BandSet& bands) const;

  EnhanceBranch low, mid, high;
  std::optional<Conv2d> combine_mid, combine_high;
  PyramidAttention pa_mid, pa_high;
  CombineMode mode = CombineMode::concat_project;
  bool interaction = true;

 private:
  Var combine(const Var& band, const Var& lower, const std::optional<Conv2d>& proj) const;
};

}  // namespace afenet
