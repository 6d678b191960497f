#include "afenet/fem.hpp"

#include <algorithm>
#include <array>

#include "afenet/error.hpp"

namespace afenet {

ChannelAttention::ChannelAttention(ParamStore& store, const std::string& prefix,
                                   const FemBlockConfig& cfg, bool zero_init_residual, Rng& rng)
    : qkv(store, prefix + ".qkv", cfg.channels, 3 * cfg.channels, 1, 1, false, rng),
      qkv_dw(store, prefix + ".qkv_dw", 3 * cfg.channels, 3, false, rng),
      temperature(store.add(prefix + ".temperature", Tensor(Shape{cfg.heads, 1, 1, 1}, 1.0))),
      project_out(store, prefix + ".project_out", cfg.channels, cfg.channels, 1, 1, false, rng),
      heads(cfg.heads),
      l2norm(cfg.attention_l2norm) {
  if (cfg.channels % cfg.heads != 0) throw ConfigError("channels must be divisible by heads");
  if (zero_init_residual) project_out.zero();
}

ChannelAttention::Heads ChannelAttention::compute(const Var& x) const {
  const Shape s = x.shape();
  if (s.c % heads != 0) {
    throw ConfigError("attention input has " + std::to_string(s.c) + " channels, not divisible by " +
                      std::to_string(heads) + " heads");
  }
  const std::int64_t ch = s.c / heads;
  const Shape head_shape{s.n, heads, ch, s.h * s.w};
  const Var proj = qkv_dw(qkv(x));
  Var q = ops::reshape(ops::slice_channels(proj, 0, s.c), head_shape);
  Var k = ops::reshape(ops::slice_channels(proj, s.c, s.c), head_shape);
  Var v = ops::reshape(ops::slice_channels(proj, 2 * s.c, s.c), head_shape);
  if (l2norm) {
    q = ops::l2_normalize(q);
    k = ops::l2_normalize(k);
  }
  const Var logits = ops::divide_channels(ops::matmul(k, ops::transpose(q)), temperature);
  return {ops::softmax(logits, 3), v};
}

Var ChannelAttention::attention(const Var& x) const { return compute(x).attn; }

Var ChannelAttention::operator()(const Var& x) const {
  const Heads h = compute(x);
  const Var mixed = ops::reshape(ops::matmul(ops::transpose(h.attn), h.v), x.shape());
  return ops::add(project_out(mixed), x);
}

GatedFeedForward::GatedFeedForward(ParamStore& store, const std::string& prefix,
                                   const FemBlockConfig& cfg, bool zero_init_residual, Rng& rng)
    : norm(store, prefix + ".norm", cfg.channels),
      project_in(store, prefix + ".project_in", cfg.channels, 2 * cfg.hidden(), 1, 1, false, rng),
      dwconv(store, prefix + ".dwconv", 2 * cfg.hidden(), 3, false, rng),
      project_out(store, prefix + ".project_out", cfg.hidden(), cfg.channels, 1, 1, false, rng),
      hidden(cfg.hidden()) {
  if (zero_init_residual) project_out.zero();
}

Var GatedFeedForward::gating(const Var& x) const {
  const Var h = dwconv(project_in(norm(x)));
  return ops::mul(ops::gelu(ops::slice_channels(h, 0, hidden)),
                  ops::slice_channels(h, hidden, hidden));
}

Var GatedFeedForward::operator()(const Var& x) const {
  return ops::add(project_out(gating(x)), x);
}

EnhancementBlock::EnhancementBlock(ParamStore& store, const std::string& prefix,
                                   const FemBlockConfig& cfg, bool zero_init_residual, Rng& rng)
    : attention(store, prefix + ".mdta", cfg, zero_init_residual, rng),
      ffn(store, prefix + ".gdfn", cfg, zero_init_residual, rng) {}

EnhanceBranch::EnhanceBranch(ParamStore& store, const std::string& prefix,
                             const FemBlockConfig& cfg, bool zero_init_residual, Rng& rng) {
  cfg.validate();
  for (std::int64_t i = 0; i < cfg.blocks_per_band; ++i) {
    blocks.emplace_back(store, prefix + ".block" + std::to_string(i), cfg, zero_init_residual, rng);
  }
}

Var EnhanceBranch::operator()(const Var& x) const {
  Var y = x;
  for (const auto& b : blocks) y = b(y);
  return y;
}

PyramidAttention::PyramidAttention(ParamStore& store, const std::string& prefix,
                                   std::int64_t channels, bool zero_init_residual, Rng& rng) {
  for (auto s : scales) {
    scale_convs.emplace_back(store, prefix + ".scale" + std::to_string(s), channels, 3, true, rng);
  }
  gate = Conv2d(store, prefix + ".gate", channels, channels, 1, 1, true, rng);
  if (zero_init_residual) gate.zero();
}

std::vector<std::int64_t> PyramidAttention::active_scales(const Shape& s) const {
  if (s.h < 4 || s.w < 4) return {1, 2};
  return scales;
}

Var PyramidAttention::gate_map(const Var& x) const {
  const Shape s = x.shape();
  Var acc;
  const auto active = active_scales(s);
  for (std::size_t i = 0; i < scales.size(); ++i) {
    const std::int64_t scale = scales[i];
    if (std::find(active.begin(), active.end(), scale) == active.end()) continue;
    const std::int64_t ph = std::max<std::int64_t>(1, s.h / scale);
    const std::int64_t pw = std::max<std::int64_t>(1, s.w / scale);
    Var level = scale_convs[i](ops::adaptive_max_pool(x, ph, pw));
    if (ph != s.h || pw != s.w) level = ops::resize_bilinear(level, s.h, s.w);
    acc = acc.defined() ? ops::add(acc, level) : level;
  }
  return ops::sigmoid(gate(acc));
}

Var PyramidAttention::operator()(const Var& x) const {
  return ops::mul(x, ops::scale(gate_map(x), 2.0));
}

CrossBandEnhancement::CrossBandEnhancement(ParamStore& store, const std::string& prefix,
                                           const FemBlockConfig& cfg, CombineMode mode_,
                                           bool interaction_, bool zero_init_residual, Rng& rng)
    : low(store, prefix + ".low", cfg, zero_init_residual, rng),
      mid(store, prefix + ".mid", cfg, zero_init_residual, rng),
      high(store, prefix + ".high", cfg, zero_init_residual, rng),
      mode(mode_),
      interaction(interaction_) {
  if (interaction && mode == CombineMode::concat_project) {
    combine_mid.emplace(store, prefix + ".mid.combine", 2 * cfg.channels, cfg.channels, 1, 1, true, rng);
    combine_high.emplace(store, prefix + ".high.combine", 2 * cfg.channels, cfg.channels, 1, 1, true, rng);
  }
  pa_mid = PyramidAttention(store, prefix + ".mid.pa", cfg.channels, zero_init_residual, rng);
  pa_high = PyramidAttention(store, prefix + ".high.pa", cfg.channels, zero_init_residual, rng);
}

Var CrossBandEnhancement::combine(const Var& band, const Var& lower,
                                  const std::optional<Conv2d>& proj) const {
  const Var lifted = ops::upsample_bilinear(lower, 2);
  if (mode == CombineMode::multiply) return ops::mul(band, lifted);
  const std::array<Var, 2> parts{band, lifted};
  return (*proj)(ops::concat_channels(parts));
}

BandSet CrossBandEnhancement::operator()(const BandSet& bands) const {
  check_band_geometry(bands);
  const Var l = low(bands.low);
  if (!interaction) {
    return {pa_high(high(bands.high)), pa_mid(mid(bands.mid)), l};
  }
  const Var m = pa_mid(combine(mid(bands.mid), l, combine_mid));
  const Var h = pa_high(combine(high(bands.high), m, combine_high));
  return {h, m, l};
}

}  // namespace afenet
