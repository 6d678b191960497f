#include <doctest.h>

#include "afenet/error.hpp"
#include "afenet/fam.hpp"
#include "afenet/ops.hpp"
#include "gradcheck.hpp"

using namespace afenet;
using afenet::testing::random_tensor;

namespace {

BandSet random_bands(std::int64_t c, std::int64_t h, std::int64_t w, Rng& rng) {
  return {Var::constant(random_tensor(Shape{1, c, h, w}, rng)),
          Var::constant(random_tensor(Shape{1, c, h / 2, w / 2}, rng)),
          Var::constant(random_tensor(Shape{1, c, h / 4, w / 4}, rng))};
}

BandSet constant_bands(std::int64_t c, std::int64_t h, std::int64_t w, double hi, double mid,
                       double lo) {
  return {Var::constant(Tensor(Shape{1, c, h, w}, hi)),
          Var::constant(Tensor(Shape{1, c, h / 2, w / 2}, mid)),
          Var::constant(Tensor(Shape{1, c, h / 4, w / 4}, lo))};
}

}  // namespace

TEST_CASE("band merge") {
  ParamStore store;
  Rng rng(1);
  BandMerge merge(store, "fam.merge", 3, rng);
  CHECK(store.contains("fam.merge.weight"));
  CHECK(store.at("fam.merge.weight").shape() == Shape{3, 9, 1, 1});

  SUBCASE("a zero projection gives zeros") {
    merge.proj.zero();
    CHECK(merge(random_bands(3, 8, 8, rng)).value().max_abs() == 0.0);
  }
  SUBCASE("an averaging projection of constant bands gives their mean") {
    merge.proj.zero();
    Tensor& w = merge.proj.weight.mutable_value();
    for (std::int64_t o = 0; o < 3; ++o)
      for (std::int64_t band = 0; band < 3; ++band) w.at(o, band * 3 + o, 0, 0) = 1.0 / 3.0;
    const Tensor y = merge(constant_bands(3, 8, 12, 0.9, 0.3, 0.6)).value();
    CHECK(y.shape() == Shape{1, 3, 8, 12});
    for (double v : y.values()) CHECK(v == doctest::Approx(0.6).epsilon(1e-14));
  }
  SUBCASE("channel order is low, mid, high") {
    merge.proj.zero();
    merge.proj.weight.mutable_value().at(0, 0, 0, 0) = 1.0;  // first low channel
    merge.proj.weight.mutable_value().at(1, 3, 0, 0) = 1.0;  // first mid channel
    merge.proj.weight.mutable_value().at(2, 6, 0, 0) = 1.0;  // first high channel
    const Tensor y = merge(constant_bands(3, 4, 4, 3.0, 2.0, 1.0)).value();
    CHECK(y.at(0, 0, 1, 1) == doctest::Approx(1.0));
    CHECK(y.at(0, 1, 1, 1) == doctest::Approx(2.0));
    CHECK(y.at(0, 2, 1, 1) == doctest::Approx(3.0));
  }
}

TEST_CASE("fam block is the identity with a zero fuse") {
  ParamStore store;
  Rng rng(2);
  const FamBlock block(store, "fam.block0", 8, 4, {2, 4, 8}, true, rng);
  const Tensor x = random_tensor(Shape{2, 8, 16, 16}, rng);
  CHECK(max_abs_diff(block(Var::constant(x)).value(), x) == 0.0);
  CHECK(store.at("fam.block0.fuse.weight").shape() == Shape{8, 8 + 8 * 3, 1, 1});
  CHECK(store.contains("fam.block0.dw3.weight"));
  CHECK(store.contains("fam.block0.norm.gain"));
}

TEST_CASE("fam block channel groups reconstruct the normalized input") {
  ParamStore store;
  Rng rng(3);
  const FamBlock block(store, "b", 12, 3, {2, 4}, false, rng);
  const Var x = Var::constant(random_tensor(Shape{1, 12, 8, 8}, rng));
  const Var y = block.norm(x);
  const auto groups = block.split(y);
  REQUIRE(groups.size() == 3);
  CHECK(max_abs_diff(ops::concat_channels(groups).value(), y.value()) == 0.0);
  const auto br = block.branches(y);
  REQUIRE(br.size() == 3);
  for (const auto& b : br) CHECK(b.shape() == Shape{1, 4, 8, 8});
  CHECK(max_abs_diff(br[0].value(), block.dwconvs[0](groups[0]).value()) == 0.0);
  CHECK_THROWS_AS(block.split(Var::constant(Tensor(Shape{1, 8, 8, 8}))), ShapeError);
}

TEST_CASE("fam block matches a scalar oracle at 4 x 4") {
  // splits 2, scales {2}, one channel per group. Group 1 is averaged to 2 x 2
  // (exact for bilinear at factor 1/2), filtered, then upsampled.
  ParamStore store;
  Rng rng(4);
  FamBlock block(store, "b", 2, 2, {2}, false, rng);
  const Tensor x = random_tensor(Shape{1, 2, 4, 4}, rng);
  const Var xv = Var::constant(x);
  const Tensor y = block.norm(xv).value();

  // Pooling branch for scale 2: 2 x 2 max over each quadrant, upsampled.
  Tensor pooled(Shape{1, 2, 2, 2});
  for (int c = 0; c < 2; ++c)
    for (int qy = 0; qy < 2; ++qy)
      for (int qx = 0; qx < 2; ++qx) {
        double m = -1e300;
        for (int dy = 0; dy < 2; ++dy)
          for (int dx = 0; dx < 2; ++dx) m = std::max(m, y.at(0, c, 2 * qy + dy, 2 * qx + dx));
        pooled.at(0, c, qy, qx) = m;
      }
  Tensor avg(Shape{1, 1, 2, 2});
  for (int qy = 0; qy < 2; ++qy)
    for (int qx = 0; qx < 2; ++qx) {
      double s = 0.0;
      for (int dy = 0; dy < 2; ++dy)
        for (int dx = 0; dx < 2; ++dx) s += y.at(0, 1, 2 * qy + dy, 2 * qx + dx);
      avg.at(0, 0, qy, qx) = s / 4.0;
    }
  const Tensor g0 = block.dwconvs[0](Var::constant(ops::slice_channels(Var::constant(y), 0, 1).value())).value();
  const Tensor g1 = ops::upsample_bilinear(block.dwconvs[1](Var::constant(avg)), 2).value();
  const Tensor p = ops::upsample_bilinear(Var::constant(pooled), 2).value();

  const Tensor& fw = block.fuse.weight.value();
  const Tensor& fb = block.fuse.bias.value();
  for (int o = 0; o < 2; ++o)
    for (int py = 0; py < 4; ++py)
      for (int px = 0; px < 4; ++px) {
        const double z = fb[o] + fw.at(o, 0, 0, 0) * g0.at(0, 0, py, px) +
                         fw.at(o, 1, 0, 0) * g1.at(0, 0, py, px) +
                         fw.at(o, 2, 0, 0) * p.at(0, 0, py, px) + fw.at(o, 3, 0, 0) * p.at(0, 1, py, px);
        const double want = 0.5 * z * (1.0 + std::erf(z / std::sqrt(2.0))) + x.at(0, o, py, px);
        CHECK(block(xv).value().at(0, o, py, px) == doctest::Approx(want).epsilon(1e-12));
      }
}

TEST_CASE("fam block handles sizes below the largest scale") {
  ParamStore store;
  Rng rng(5);
  const FamBlock block(store, "b", 4, 4, {2, 4, 8}, false, rng);
  for (auto [h, w] : {std::pair{4, 4}, std::pair{2, 6}, std::pair{1, 1}}) {
    CHECK(block(Var::constant(random_tensor(Shape{1, 4, h, w}, rng))).shape() == Shape{1, 4, h, w});
  }
}

TEST_CASE("fam configuration errors") {
  ParamStore store;
  Rng rng(6);
  CHECK_THROWS_AS(FamBlock(store, "a", 10, 4, {2, 4, 8}, true, rng), ConfigError);
  CHECK_THROWS_AS(FamBlock(store, "b", 8, 4, {2, 4}, true, rng), ConfigError);
  CHECK_THROWS_AS(FamBlock(store, "c", 8, 2, {0}, true, rng), ConfigError);
}

TEST_CASE("frequency aggregation") {
  ParamStore store;
  Rng rng(7);
  const FrequencyAggregation fam(store, "fam", 4, 2, {2}, 2, true, rng);
  REQUIRE(fam.blocks.size() == 2);
  const BandSet bands = random_bands(4, 16, 8, rng);
  // Zero-init blocks leave the merged features unchanged.
  CHECK(max_abs_diff(fam(bands).value(), fam.merge(bands).value()) == 0.0);
  CHECK(store.contains("fam.block1.fuse.bias"));
  CHECK_THROWS_AS(fam(BandSet{bands.high, bands.high, bands.low}), ShapeError);
}
