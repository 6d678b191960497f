#include "afenet/fam.hpp"

#include <algorithm>
#include <array>
#include <utility>

#include "afenet/error.hpp"

namespace afenet {

namespace {

std::int64_t reduced(std::int64_t size, std::int64_t scale) {
  return std::max<std::int64_t>(1, size / scale);
}

}  // namespace

BandMerge::BandMerge(ParamStore& store, const std::string& prefix, std::int64_t channels, Rng& rng)
    : proj(store, prefix, 3 * channels, channels, 1, 1, true, rng) {}

Var BandMerge::operator()(const BandSet& bands) const {
  check_band_geometry(bands);
  const std::array<Var, 3> parts{ops::upsample_bilinear(bands.low, 4),
                                 ops::upsample_bilinear(bands.mid, 2), bands.high};
  return proj(ops::concat_channels(parts));
}

FamBlock::FamBlock(ParamStore& store, const std::string& prefix, std::int64_t channels_,
                   std::int64_t splits_, std::vector<std::int64_t> scales_,
                   bool zero_init_residual, Rng& rng)
    : channels(channels_), splits(splits_), scales(std::move(scales_)) {
  if (splits < 1 || channels % splits != 0) {
    throw ConfigError("fam block: channels (" + std::to_string(channels) +
                      ") must be divisible by splits (" + std::to_string(splits) + ")");
  }
  if (static_cast<std::int64_t>(scales.size()) != splits - 1) {
    throw ConfigError("fam block: expected " + std::to_string(splits - 1) + " scales, got " +
                      std::to_string(scales.size()));
  }
  for (auto s : scales) {
    if (s < 1) throw ConfigError("fam block: scales must be positive");
  }
  norm = LayerNorm(store, prefix + ".norm", channels);
  const std::int64_t group = channels / splits;
  for (std::int64_t i = 0; i < splits; ++i) {
    dwconvs.emplace_back(store, prefix + ".dw" + std::to_string(i), group, 3, true, rng);
  }
  const auto fused_in = channels + channels * static_cast<std::int64_t>(scales.size());
  fuse = Conv2d(store, prefix + ".fuse", fused_in, channels, 1, 1, true, rng);
  if (zero_init_residual) fuse.zero();
}

std::vector<Var> FamBlock::split(const Var& y) const {
  if (y.shape().c != channels) throw ShapeError("fam block: channel mismatch for " + y.shape().str());
  const std::int64_t group = channels / splits;
  std::vector<Var> out;
  for (std::int64_t i = 0; i < splits; ++i) out.push_back(ops::slice_channels(y, i * group, group));
  return out;
}

std::vector<Var> FamBlock::branches(const Var& y) const {
  const Shape s = y.shape();
  auto groups = split(y);
  std::vector<Var> out;
  out.push_back(dwconvs[0](groups[0]));
  for (std::int64_t i = 1; i < splits; ++i) {
    const std::int64_t scale = scales[i - 1];
    const std::int64_t h = reduced(s.h, scale), w = reduced(s.w, scale);
    Var g = groups[i];
    if (h != s.h || w != s.w) g = ops::resize_bilinear(g, h, w);
    g = dwconvs[i](g);
    if (h != s.h || w != s.w) g = ops::resize_bilinear(g, s.h, s.w);
    out.push_back(g);
  }
  return out;
}

Var FamBlock::operator()(const Var& x) const {
  const Shape s = x.shape();
  const Var y = norm(x);
  std::vector<Var> parts = branches(y);
  for (auto scale : scales) {
    const std::int64_t h = reduced(s.h, scale), w = reduced(s.w, scale);
    Var p = ops::adaptive_max_pool(y, h, w);
    if (h != s.h || w != s.w) p = ops::resize_bilinear(p, s.h, s.w);
    parts.push_back(p);
  }
  return ops::add(ops::gelu(fuse(ops::concat_channels(parts))), x);
}

FrequencyAggregation::FrequencyAggregation(ParamStore& store, const std::string& prefix,
                                           std::int64_t channels, std::int64_t splits,
                                           const std::vector<std::int64_t>& scales,
                                           std::int64_t depth, bool zero_init_residual, Rng& rng)
    : merge(store, prefix + ".merge", channels, rng) {
  for (std::int64_t i = 0; i < depth; ++i) {
    blocks.emplace_back(store, prefix + ".block" + std::to_string(i), channels, splits, scales,
                        zero_init_residual, rng);
  }
}

Var FrequencyAggregation::operator()(const BandSet& bands) const { return refine(merge(bands)); }

Var FrequencyAggregation::refine(const Var& x) const {
  Var y = x;
  for (const auto& b : blocks) y = b(y);
  return y;
}

}  // namespace afenet
