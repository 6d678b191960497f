#include "afenet/metrics.hpp"

#include <cmath>
#include <limits>

#include "afenet/error.hpp"

namespace afenet {

namespace {

constexpr int kWindow = 11;
constexpr double kSigma = 1.5;
constexpr double kPeak = 255.0;

void require_same(const Plane& a, const Plane& b, const char* what) {
  if (a.height != b.height || a.width != b.width) {
    throw ShapeError(std::string(what) + ": image sizes differ (" + std::to_string(a.height) + "x" +
                     std::to_string(a.width) + " vs " + std::to_string(b.height) + "x" +
                     std::to_string(b.width) + ")");
  }
}

// Valid-mode separable filtering: (H - k + 1) x (W - k + 1) output.
std::vector<double> filter_valid(const std::vector<double>& src, std::int64_t h, std::int64_t w,
                                 const std::vector<double>& taps) {
  const std::int64_t k = static_cast<std::int64_t>(taps.size());
  const std::int64_t oh = h - k + 1, ow = w - k + 1;
  std::vector<double> rows(static_cast<std::size_t>(h * ow));
  for (std::int64_t y = 0; y < h; ++y) {
    for (std::int64_t x = 0; x < ow; ++x) {
      double s = 0.0;
      for (std::int64_t t = 0; t < k; ++t) s += taps[t] * src[y * w + x + t];
      rows[y * ow + x] = s;
    }
  }
  std::vector<double> out(static_cast<std::size_t>(oh * ow));
  for (std::int64_t y = 0; y < oh; ++y) {
    for (std::int64_t x = 0; x < ow; ++x) {
      double s = 0.0;
      for (std::int64_t t = 0; t < k; ++t) s += taps[t] * rows[(y + t) * ow + x];
      out[y * ow + x] = s;
    }
  }
  return out;
}

}  // namespace

Plane luminance_255(const Image& img) { return rgb_to_luminance(to_byte(img)); }

double psnr(const Plane& a, const Plane& b) {
  require_same(a, b, "psnr");
  if (a.values.empty()) throw InvalidArgument("psnr: empty image");
  double sq = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    const double d = a.values[i] - b.values[i];
    sq += d * d;
  }
  const double mse = sq / static_cast<double>(a.values.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(kPeak * kPeak / mse);
}

double psnr(const Image& a, const Image& b) {
  if (a.height != b.height || a.width != b.width) {
    throw ShapeError("psnr: image sizes differ");
  }
  return psnr(luminance_255(a), luminance_255(b));
}

std::vector<double> gaussian_window(int size, double sigma) {
  std::vector<double> taps(static_cast<std::size_t>(size));
  const double c = (size - 1) / 2.0;
  double total = 0.0;
  for (int i = 0; i < size; ++i) {
    taps[i] = std::exp(-((i - c) * (i - c)) / (2.0 * sigma * sigma));
    total += taps[i];
  }
  for (double& t : taps) t /= total;
  return taps;
}

double ssim(const Plane& a, const Plane& b) {
  require_same(a, b, "ssim");
  if (a.height < kWindow || a.width < kWindow) {
    throw InvalidArgument("ssim needs images of at least 11x11, got " + std::to_string(a.height) +
                          "x" + std::to_string(a.width));
  }
  const auto taps = gaussian_window(kWindow, kSigma);
  const std::int64_t h = a.height, w = a.width;
  std::vector<double> aa(a.values.size()), bb(a.values.size()), ab(a.values.size());
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    aa[i] = a.values[i] * a.values[i];
    bb[i] = b.values[i] * b.values[i];
    ab[i] = a.values[i] * b.values[i];
  }
  const auto mu_a = filter_valid(a.values, h, w, taps);
  const auto mu_b = filter_valid(b.values, h, w, taps);
  const auto e_aa = filter_valid(aa, h, w, taps);
  const auto e_bb = filter_valid(bb, h, w, taps);
  const auto e_ab = filter_valid(ab, h, w, taps);
  const double c1 = (0.01 * kPeak) * (0.01 * kPeak);
  const double c2 = (0.03 * kPeak) * (0.03 * kPeak);
  double total = 0.0;
  for (std::size_t i = 0; i < mu_a.size(); ++i) {
    const double ma = mu_a[i], mb = mu_b[i];
    const double va = e_aa[i] - ma * ma;
    const double vb = e_bb[i] - mb * mb;
    const double cov = e_ab[i] - ma * mb;
    total += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) /
             ((ma * ma + mb * mb + c1) * (va + vb + c2));
  }
  return total / static_cast<double>(mu_a.size());
}

double ssim(const Image& a, const Image& b) {
  if (a.height != b.height || a.width != b.width) {
    throw ShapeError("ssim: image sizes differ");
  }
  return ssim(luminance_255(a), luminance_255(b));
}

}  // namespace afenet
