#include "afenet/model.hpp"

#include <algorithm>
#include <utility>

#include "afenet/error.hpp"

namespace afenet {

namespace {

constexpr std::int64_t kImageChannels = 3;

}  // namespace

Afenet::Afenet(ModelConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  Rng rng(mix_seed(cfg_.init_seed));
  const auto fem_cfg = cfg_.fem();
  const std::int64_t c = cfg_.channels;
  const bool zr = cfg_.zero_init_residual;

  if (cfg_.variant == Variant::S1) {
    stem_.emplace(store_, "stem", kImageChannels, c, 3, 1, true, rng);
    single_.emplace(store_, "fem.single", fem_cfg, zr, rng);
    for (std::int64_t i = 0; i < cfg_.fam_depth; ++i) {
      single_fam_.emplace_back(store_, "fam.block" + std::to_string(i), c, cfg_.fam_splits,
                               cfg_.fam_scales, zr, rng);
    }
  } else {
    if (cfg_.variant == Variant::S2) {
      dct_.emplace(store_, "dct", kImageChannels, c, rng);
    } else {
      fdm_.emplace(store_, "fdm", kImageChannels, c, rng);
    }
    fem_.emplace(store_, "fem", fem_cfg, cfg_.combine, cfg_.variant != Variant::S3, zr, rng);
    if (cfg_.variant == Variant::S4) {
      fuse_.emplace(store_, "fuse", c, rng);
    } else {
      fam_.emplace(store_, "fam", c, cfg_.fam_splits, cfg_.fam_scales, cfg_.fam_depth, zr, rng);
    }
  }
  head_ = Conv2d(store_, "head", c, kImageChannels, 3, 1, true, rng);
  if (cfg_.zero_init_head) head_.zero();
}

BandSet Afenet::decompose(const Var& image) const {
  if (dct_) return dct_->decompose(image);
  if (fdm_) return fdm_->decompose(image);
  throw Unsupported("variant S1 has no band decomposition");
}

Var Afenet::features(const Var& image) const {
  if (cfg_.variant == Variant::S1) {
    Var y = (*single_)((*stem_)(image));
    for (const auto& b : single_fam_) y = b(y);
    return y;
  }
  const BandSet enhanced = (*fem_)(decompose(image));
  return fuse_ ? (*fuse_)(enhanced) : (*fam_)(enhanced);
}

Var Afenet::forward(const Var& image) const {
  const Shape s = image.shape();
  if (s.c != kImageChannels) throw ShapeError("model expects 3-channel input, got " + s.str());
  if (s.h % 4 != 0 || s.w % 4 != 0) {
    throw ShapeError("model input height and width must be divisible by 4, got " + s.str());
  }
  const Var out = head_(features(image));
  return cfg_.global_residual ? ops::add(out, image) : out;
}

Tensor Afenet::infer(const Tensor& image) const {
  NoGradGuard guard;
  Tensor out = forward(Var::constant(image)).value();
  for (auto& v : out.values()) v = std::clamp(v, 0.0, 1.0);
  return out;
}

Image Afenet::derain(const Image& rainy) const {
  const Image unit = to_unit(rainy);
  const Image padded = reflect_pad_to_multiple(unit, 4);
  const Image out = tensor_to_image(infer(image_to_tensor(padded)), 0, true);
  return crop(out, 0, 0, rainy.height, rainy.width);
}

}  // namespace afenet
