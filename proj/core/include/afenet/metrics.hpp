#pragma once

#include <vector>

#include "afenet/image.hpp"

namespace afenet {

/// Luminance Y = 0.299 R + 0.587 G + 0.114 B on the 0-255 scale (no
/// rounding), whatever the input range.
Plane luminance_255(const Image& img);

/// PSNR of the Y channels with peak 255. Returns +infinity when the images
/// are identical. ShapeError on mismatched dimensions.
double psnr(const Image& a, const Image& b);
double psnr(const Plane& a, const Plane& b);

/// Single-scale SSIM of the Y channels: 11 x 11 Gaussian window (sigma 1.5),
/// K1 = 0.01, K2 = 0.03, L = 255, averaged over every window position that
/// lies fully inside the image. InvalidArgument when either side is below 11.
double ssim(const Image& a, const Image& b);
double ssim(const Plane& a, const Plane& b);

/// Normalized 1-D Gaussian taps (the 2-D window is their outer product).
std::vector<double> gaussian_window(int size, double sigma);

}  // namespace afenet
