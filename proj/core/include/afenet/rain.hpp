#pragma once

#include <cstdint>

#include "afenet/image.hpp"

namespace afenet {

struct RainSynthesisConfig {
  std::int64_t streak_count = 60;
  std::int64_t streak_length_px = 10;
  double streak_angle_deg = 10.0;  ///< clockwise from vertical
  double streak_intensity = 0.5;   ///< in [0, 1]
  double accumulation_sigma = 8.0; ///< Gaussian blur scale of the veil, pixels
  double accumulation_strength = 0.15;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Additive streak layer: `streak_count` one-pixel-wide oriented segments.
Plane streak_layer(std::int64_t height, std::int64_t width, const RainSynthesisConfig& cfg);

/// Low-frequency brightness veil in [strength/2, strength].
Plane accumulation_layer(std::int64_t height, std::int64_t width, const RainSynthesisConfig& cfg);

/// rainy = clip(clean + streaks + veil, 0, 1); the layers are added to all
/// three colour channels.
PairedSample synthesize_rain(const Image& clean, const RainSynthesisConfig& cfg);

/// Procedural clean scene (gradients, shapes, fine texture) in [0.05, 0.8].
Image make_clean_scene(std::int64_t height, std::int64_t width, std::uint64_t seed);

/// Separable Gaussian blur with reflected borders.
Plane gaussian_blur(const Plane& p, double sigma);

}  // namespace afenet
