#pragma once

#include <cstdint>
#include <string>

#include "afenet/band_analysis.hpp"
#include "afenet/layers.hpp"

namespace afenet {

/// High/mid/low feature bands at full, half and quarter resolution.
struct BandSet {
  Var high;
  Var mid;
  Var low;
};

/// Throws ShapeError unless the bands have a common channel count and
/// spatial ratios exactly 1 : 1/2 : 1/4.
void check_band_geometry(const BandSet& bands);

/// Learned frequency split by strided convolutions and cross-scale
/// subtraction:
///   d     = down1(I)                (3 -> C, stride 2)
///   low   = down2(d)                (C -> C, stride 2)
///   mid   = d - up2(low)
///   high  = full(I) - up2(d)        (full: 3 -> C, stride 1)
/// `d` is computed once and feeds both mid and high.
class FrequencyDecomposition {
 public:
  FrequencyDecomposition() = default;
  FrequencyDecomposition(ParamStore& store, const std::string& prefix, std::int64_t in_channels,
                         std::int64_t channels, Rng& rng);

  /// Input height and width must be divisible by 4.
  BandSet decompose(const Var& image) const;

  Conv2d full;
  Conv2d down1;
  Conv2d down2;
};

/// Spectral projection of every (n, c) plane onto one DCT band:
/// idct2(mask_band * dct2(x)). The plane mean is handled outside the
/// transform so that constant planes map to exact zeros in the mid/high
/// bands.
Var dct_band_filter(const Var& x, Band band);

/// Fixed DCT band split used by ablation S2: a 1x1 convolution lifts the
/// input to C channels, the three spectral projections are taken at full
/// resolution, and the low/mid parts are box-averaged by 4 and 2.
class DctDecomposition {
 public:
  DctDecomposition() = default;
  DctDecomposition(ParamStore& store, const std::string& prefix, std::int64_t in_channels,
                   std::int64_t channels, Rng& rng);

  BandSet decompose(const Var& image) const;
  /// The three full-resolution projections (before downsampling).
  BandSet full_resolution_bands(const Var& image) const;

  Conv2d lift;
};

}  // namespace afenet
