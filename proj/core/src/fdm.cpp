#include "afenet/fdm.hpp"

#include <memory>

#include <Eigen/Core>

#include "afenet/dct.hpp"
#include "afenet/error.hpp"

namespace afenet {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

void require_divisible_by_4(const Shape& s) {
  if (s.h % 4 != 0 || s.w % 4 != 0) {
    throw ShapeError("frequency decomposition needs height and width divisible by 4, got " + s.str());
  }
}

struct SpectralProjector {
  RowMat dh, dw, mask;
  bool keep_mean = false;

  SpectralProjector(std::int64_t h, std::int64_t w, Band band) {
    const auto bh = dct_matrix(h);
    const auto bw = dct_matrix(w);
    dh = Eigen::Map<const RowMat>(bh.data(), h, h);
    dw = Eigen::Map<const RowMat>(bw.data(), w, w);
    const auto masks = partition_bands(h, w);
    const BandMask& m = masks[static_cast<int>(band)];
    mask.resize(h, w);
    for (std::int64_t u = 0; u < h; ++u) {
      for (std::int64_t v = 0; v < w; ++v) mask(u, v) = m.contains(u, v) ? 1.0 : 0.0;
    }
    keep_mean = (band == Band::low);
  }

  // out = B (x - mean) [+ mean]; B is symmetric so the adjoint has the same
  // form with the centring applied after the projection.
  void apply(const double* in, double* out, bool adjoint) const {
    const auto h = dh.rows(), w = dw.rows();
    Eigen::Map<const RowMat> x(in, h, w);
    // Shifted mean: exact for constant planes.
    const double mean = x(0, 0) + (x.array() - x(0, 0)).mean();
    RowMat centred = adjoint ? RowMat(x) : RowMat(x.array() - mean);
    RowMat coeff = dh * centred * dw.transpose();
    coeff.array() *= mask.array();
    RowMat y = dh.transpose() * coeff * dw;
    if (adjoint) y.array() -= y(0, 0) + (y.array() - y(0, 0)).mean();
    if (keep_mean) y.array() += mean;
    Eigen::Map<RowMat>(out, h, w) = y;
  }
};

}  // namespace

void check_band_geometry(const BandSet& b) {
  const Shape h = b.high.shape(), m = b.mid.shape(), l = b.low.shape();
  if (h.c != m.c || h.c != l.c || h.n != m.n || h.n != l.n || m.h * 2 != h.h || m.w * 2 != h.w ||
      l.h * 4 != h.h || l.w * 4 != h.w) {
    throw ShapeError("band geometry must be 1 : 1/2 : 1/4 with equal channels, got high " + h.str() +
                     ", mid " + m.str() + ", low " + l.str());
  }
}

FrequencyDecomposition::FrequencyDecomposition(ParamStore& store, const std::string& prefix,
                                               std::int64_t in_channels, std::int64_t channels,
                                               Rng& rng)
    : full(store, prefix + ".full", in_channels, channels, 3, 1, true, rng),
      down1(store, prefix + ".down1", in_channels, channels, 3, 2, true, rng),
      down2(store, prefix + ".down2", channels, channels, 3, 2, true, rng) {}

BandSet FrequencyDecomposition::decompose(const Var& image) const {
  require_divisible_by_4(image.shape());
  const Var half = down1(image);
  const Var low = down2(half);
  const Var mid = ops::sub(half, ops::upsample_bilinear(low, 2));
  const Var high = ops::sub(full(image), ops::upsample_bilinear(half, 2));
  return {high, mid, low};
}

Var dct_band_filter(const Var& x, Band band) {
  const Shape s = x.shape();
  auto proj = std::make_shared<SpectralProjector>(s.h, s.w, band);
  Tensor out(s);
  for (std::int64_t n = 0; n < s.n; ++n) {
    for (std::int64_t c = 0; c < s.c; ++c) proj->apply(x.value().plane(n, c), out.plane(n, c), false);
  }
  return make_result(std::move(out), {x}, [x, s, proj](const Tensor& g) {
    Tensor gx(s);
    for (std::int64_t n = 0; n < s.n; ++n) {
      for (std::int64_t c = 0; c < s.c; ++c) proj->apply(g.plane(n, c), gx.plane(n, c), true);
    }
    accumulate_grad(x, gx);
  });
}

DctDecomposition::DctDecomposition(ParamStore& store, const std::string& prefix,
                                   std::int64_t in_channels, std::int64_t channels, Rng& rng)
    : lift(store, prefix + ".lift", in_channels, channels, 1, 1, true, rng) {}

BandSet DctDecomposition::full_resolution_bands(const Var& image) const {
  const Var lifted = lift(image);
  return {dct_band_filter(lifted, Band::high), dct_band_filter(lifted, Band::mid),
          dct_band_filter(lifted, Band::low)};
}

BandSet DctDecomposition::decompose(const Var& image) const {
  require_divisible_by_4(image.shape());
  const BandSet full = full_resolution_bands(image);
  return {full.high, ops::avg_pool(full.mid, 2), ops::avg_pool(full.low, 4)};
}

}  // namespace afenet
