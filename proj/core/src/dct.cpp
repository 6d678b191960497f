#include "afenet/dct.hpp"

#include <cmath>
#include <numbers>

#include <Eigen/Core>

#include "afenet/error.hpp"

namespace afenet {

namespace {
using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

RowMat basis(std::int64_t n) {
  const std::vector<double> d = dct_matrix(n);
  return Eigen::Map<const RowMat>(d.data(), n, n);
}

void require_nonempty(const Plane& p) {
  if (p.height < 1 || p.width < 1 ||
      p.values.size() != static_cast<std::size_t>(p.height * p.width)) {
    throw InvalidArgument("DCT input must be a nonempty H x W array");
  }
}
}  // namespace

std::vector<double> dct_matrix(std::int64_t n) {
  std::vector<double> d(static_cast<std::size_t>(n * n));
  const double a0 = std::sqrt(1.0 / static_cast<double>(n));
  const double a = std::sqrt(2.0 / static_cast<double>(n));
  for (std::int64_t u = 0; u < n; ++u) {
    for (std::int64_t x = 0; x < n; ++x) {
      d[static_cast<std::size_t>(u * n + x)] =
          (u == 0 ? a0 : a) *
          std::cos(std::numbers::pi * static_cast<double>((2 * x + 1) * u) / static_cast<double>(2 * n));
    }
  }
  return d;
}

Plane dct2(const Plane& x) {
  require_nonempty(x);
  const RowMat dh = basis(x.height), dw = basis(x.width);
  Plane out{x.height, x.width, std::vector<double>(x.values.size())};
  Eigen::Map<RowMat>(out.values.data(), x.height, x.width) =
      dh * Eigen::Map<const RowMat>(x.values.data(), x.height, x.width) * dw.transpose();
  return out;
}

Plane idct2(const Plane& coeffs) {
  require_nonempty(coeffs);
  const RowMat dh = basis(coeffs.height), dw = basis(coeffs.width);
  Plane out{coeffs.height, coeffs.width, std::vector<double>(coeffs.values.size())};
  Eigen::Map<RowMat>(out.values.data(), coeffs.height, coeffs.width) =
      dh.transpose() * Eigen::Map<const RowMat>(coeffs.values.data(), coeffs.height, coeffs.width) * dw;
  return out;
}

}  // namespace afenet
