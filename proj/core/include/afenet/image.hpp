#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "afenet/tensor.hpp"

namespace afenet {

enum class ValueRange { unit, byte };

/// H x W x 3 raster, interleaved RGB. Internal computation uses the unit
/// range; the byte range only appears at file boundaries.
struct Image {
  std::int64_t height = 0;
  std::int64_t width = 0;
  ValueRange range = ValueRange::unit;
  std::vector<double> pixels;

  Image() = default;
  Image(std::int64_t h, std::int64_t w, ValueRange r = ValueRange::unit, double fill = 0.0);

  double& at(std::int64_t y, std::int64_t x, int c) {
    return pixels[static_cast<std::size_t>((y * width + x) * 3 + c)];
  }
  double at(std::int64_t y, std::int64_t x, int c) const {
    return pixels[static_cast<std::size_t>((y * width + x) * 3 + c)];
  }

  double max_value() const { return range == ValueRange::unit ? 1.0 : 255.0; }
  bool same_geometry(const Image& other) const {
    return height == other.height && width == other.width && range == other.range;
  }
  /// Throws InvalidArgument when a pixel leaves the declared range.
  void validate() const;
  double mean() const;
};

/// Single-channel H x W array.
struct Plane {
  std::int64_t height = 0;
  std::int64_t width = 0;
  std::vector<double> values;

  double& at(std::int64_t y, std::int64_t x) {
    return values[static_cast<std::size_t>(y * width + x)];
  }
  double at(std::int64_t y, std::int64_t x) const {
    return values[static_cast<std::size_t>(y * width + x)];
  }
};

struct PairedSample {
  std::string name;
  Image rainy;
  Image clean;

  void validate() const;
};

/// Reads an 8-bit RGB PNG (other PNG colour types are converted).
Image load_image(const std::filesystem::path& path);

/// Writes 8-bit RGB; unit-range images are scaled by 255 and rounded.
void save_image(const Image& img, const std::filesystem::path& path);

Image to_unit(const Image& img);
Image to_byte(const Image& img);

/// ITU-R BT.601 luma, same scale as the input range.
Plane rgb_to_luminance(const Image& img);

/// Co-located square crop at a seed-determined position.
PairedSample sample_patch_pair(const PairedSample& pair, std::int64_t size, std::uint64_t seed);

/// Mirror both members: flip_h reverses columns, flip_v reverses rows.
PairedSample augment_flip(const PairedSample& pair, bool flip_h, bool flip_v);

/// Stack unit-range images into an (N, 3, H, W) tensor.
Tensor images_to_tensor(std::span<const Image> images);
Tensor image_to_tensor(const Image& img);

/// Extract batch entry `n` of an (N, 3, H, W) tensor as a unit-range image;
/// values are clipped to [0, 1] when `clip` is set.
Image tensor_to_image(const Tensor& t, std::int64_t n = 0, bool clip = true);

/// Reflection padding on the bottom/right edge up to multiples of `multiple`.
Image reflect_pad_to_multiple(const Image& img, std::int64_t multiple);
Image crop(const Image& img, std::int64_t y0, std::int64_t x0, std::int64_t h, std::int64_t w);

}  // namespace afenet
