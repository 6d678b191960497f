#include "afenet/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>

#include "afenet/error.hpp"
#include "afenet/rng.hpp"

namespace afenet {

Image::Image(std::int64_t h, std::int64_t w, ValueRange r, double fill)
    : height(h), width(w), range(r), pixels(static_cast<std::size_t>(h * w * 3), fill) {
  if (h < 1 || w < 1) throw InvalidArgument("image dimensions must be positive");
}

void Image::validate() const {
  if (height < 1 || width < 1) throw InvalidArgument("image dimensions must be positive");
  if (pixels.size() != static_cast<std::size_t>(height * width * 3)) {
    throw InvalidArgument("pixel buffer does not match image dimensions");
  }
  const double hi = max_value();
  for (double v : pixels) {
    if (!(v >= 0.0 && v <= hi)) throw InvalidArgument("pixel value outside declared range");
  }
}

double Image::mean() const {
  double s = 0.0;
  for (double v : pixels) s += v;
  return s / static_cast<double>(pixels.size());
}

void PairedSample::validate() const {
  if (!rainy.same_geometry(clean)) {
    throw InvalidArgument("pair '" + name + "': rainy and clean geometry differ");
  }
}

Image load_image(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw NotFound("image not found: " + path.string());
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&png, path.c_str())) {
    throw DecodeError("cannot decode PNG " + path.string() + ": " + png.message);
  }
  png.format = PNG_FORMAT_RGB;
  std::vector<png_byte> buffer(PNG_IMAGE_SIZE(png));
  if (!png_image_finish_read(&png, nullptr, buffer.data(), 0, nullptr)) {
    std::string msg = png.message;
    png_image_free(&png);
    throw DecodeError("cannot decode PNG " + path.string() + ": " + msg);
  }
  Image img(png.height, png.width, ValueRange::byte);
  std::transform(buffer.begin(), buffer.end(), img.pixels.begin(),
                 [](png_byte b) { return static_cast<double>(b); });
  return img;
}

void save_image(const Image& img, const std::filesystem::path& path) {
  const double scale = img.range == ValueRange::unit ? 255.0 : 1.0;
  std::vector<png_byte> buffer(img.pixels.size());
  for (std::size_t i = 0; i < buffer.size(); ++i) {
    const double v = std::clamp(std::round(img.pixels[i] * scale), 0.0, 255.0);
    buffer[i] = static_cast<png_byte>(v);
  }
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(img.width);
  png.height = static_cast<png_uint_32>(img.height);
  png.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&png, path.c_str(), 0, buffer.data(), 0, nullptr)) {
    throw IoError("cannot write PNG " + path.string() + ": " + png.message);
  }
}

Image to_unit(const Image& img) {
  if (img.range == ValueRange::unit) return img;
  Image out = img;
  out.range = ValueRange::unit;
  for (double& v : out.pixels) v /= 255.0;
  return out;
}

Image to_byte(const Image& img) {
  if (img.range == ValueRange::byte) return img;
  Image out = img;
  out.range = ValueRange::byte;
  for (double& v : out.pixels) v *= 255.0;
  return out;
}

Plane rgb_to_luminance(const Image& img) {
  Plane y{img.height, img.width, std::vector<double>(static_cast<std::size_t>(img.height * img.width))};
  for (std::size_t i = 0; i < y.values.size(); ++i) {
    const double* p = img.pixels.data() + 3 * i;
    y.values[i] = 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2];
  }
  return y;
}

Image crop(const Image& img, std::int64_t y0, std::int64_t x0, std::int64_t h, std::int64_t w) {
  if (y0 < 0 || x0 < 0 || y0 + h > img.height || x0 + w > img.width) {
    throw InvalidArgument("crop window outside image");
  }
  Image out(h, w, img.range);
  for (std::int64_t y = 0; y < h; ++y) {
    const double* src = img.pixels.data() + ((y0 + y) * img.width + x0) * 3;
    std::copy_n(src, w * 3, out.pixels.data() + y * w * 3);
  }
  return out;
}

PairedSample sample_patch_pair(const PairedSample& pair, std::int64_t size, std::uint64_t seed) {
  pair.validate();
  const std::int64_t h = pair.clean.height, w = pair.clean.width;
  if (size < 1 || size > std::min(h, w)) {
    throw InvalidArgument("patch size " + std::to_string(size) + " exceeds image " +
                          std::to_string(h) + "x" + std::to_string(w));
  }
  Rng rng(mix_seed(seed));
  const std::int64_t y0 = rng.below(h - size + 1);
  const std::int64_t x0 = rng.below(w - size + 1);
  return {pair.name, crop(pair.rainy, y0, x0, size, size), crop(pair.clean, y0, x0, size, size)};
}

namespace {
Image flip(const Image& img, bool flip_h, bool flip_v) {
  Image out(img.height, img.width, img.range);
  for (std::int64_t y = 0; y < img.height; ++y) {
    const std::int64_t sy = flip_v ? img.height - 1 - y : y;
    for (std::int64_t x = 0; x < img.width; ++x) {
      const std::int64_t sx = flip_h ? img.width - 1 - x : x;
      for (int c = 0; c < 3; ++c) out.at(y, x, c) = img.at(sy, sx, c);
    }
  }
  return out;
}

std::int64_t mirror(std::int64_t i, std::int64_t n) {
  if (n == 1) return 0;
  const std::int64_t period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}
}  // namespace

PairedSample augment_flip(const PairedSample& pair, bool flip_h, bool flip_v) {
  if (!flip_h && !flip_v) return pair;
  return {pair.name, flip(pair.rainy, flip_h, flip_v), flip(pair.clean, flip_h, flip_v)};
}

Tensor images_to_tensor(std::span<const Image> images) {
  if (images.empty()) throw InvalidArgument("images_to_tensor: empty batch");
  const std::int64_t h = images.front().height, w = images.front().width;
  Tensor t(Shape{static_cast<std::int64_t>(images.size()), 3, h, w});
  for (std::size_t n = 0; n < images.size(); ++n) {
    const Image unit = to_unit(images[n]);
    if (unit.height != h || unit.width != w) throw ShapeError("images_to_tensor: mixed sizes");
    for (int c = 0; c < 3; ++c) {
      double* dst = t.plane(static_cast<std::int64_t>(n), c);
      for (std::int64_t i = 0; i < h * w; ++i) dst[i] = unit.pixels[static_cast<std::size_t>(3 * i + c)];
    }
  }
  return t;
}

Tensor image_to_tensor(const Image& img) { return images_to_tensor(std::span<const Image>(&img, 1)); }

Image tensor_to_image(const Tensor& t, std::int64_t n, bool clip) {
  const Shape s = t.shape();
  if (s.c != 3) throw ShapeError("tensor_to_image: expected 3 channels, got " + s.str());
  Image img(s.h, s.w, ValueRange::unit);
  for (int c = 0; c < 3; ++c) {
    const double* src = t.plane(n, c);
    for (std::int64_t i = 0; i < s.h * s.w; ++i) {
      const double v = src[i];
      img.pixels[static_cast<std::size_t>(3 * i + c)] = clip ? std::clamp(v, 0.0, 1.0) : v;
    }
  }
  return img;
}

Image reflect_pad_to_multiple(const Image& img, std::int64_t multiple) {
  const std::int64_t h = (img.height + multiple - 1) / multiple * multiple;
  const std::int64_t w = (img.width + multiple - 1) / multiple * multiple;
  if (h == img.height && w == img.width) return img;
  Image out(h, w, img.range);
  for (std::int64_t y = 0; y < h; ++y) {
    const std::int64_t sy = mirror(y, img.height);
    for (std::int64_t x = 0; x < w; ++x) {
      const std::int64_t sx = mirror(x, img.width);
      for (int c = 0; c < 3; ++c) out.at(y, x, c) = img.at(sy, sx, c);
    }
  }
  return out;
}

}  // namespace afenet
