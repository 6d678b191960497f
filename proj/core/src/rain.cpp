#include "afenet/rain.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "afenet/error.hpp"
#include "afenet/rng.hpp"

namespace afenet {

namespace {
constexpr std::uint64_t kStreakStream = 1;
constexpr std::uint64_t kVeilStream = 2;

std::int64_t reflect(std::int64_t i, std::int64_t n) {
  if (n == 1) return 0;
  const std::int64_t period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}
}  // namespace

void RainSynthesisConfig::validate() const {
  if (streak_count < 0) throw InvalidArgument("streak_count must be nonnegative");
  if (streak_length_px < 1) throw InvalidArgument("streak_length_px must be positive");
  if (!(streak_intensity >= 0.0 && streak_intensity <= 1.0)) {
    throw InvalidArgument("streak_intensity must lie in [0, 1]");
  }
  if (!(accumulation_sigma >= 0.0)) throw InvalidArgument("accumulation_sigma must be >= 0");
  if (!(accumulation_strength >= 0.0 && accumulation_strength <= 1.0)) {
    throw InvalidArgument("accumulation_strength must lie in [0, 1]");
  }
  if (!std::isfinite(streak_angle_deg)) throw InvalidArgument("streak_angle_deg must be finite");
}

Plane streak_layer(std::int64_t height, std::int64_t width, const RainSynthesisConfig& cfg) {
  cfg.validate();
  Plane layer{height, width, std::vector<double>(static_cast<std::size_t>(height * width), 0.0)};
  Rng rng(derive_seed(cfg.seed, kStreakStream));
  const double theta = cfg.streak_angle_deg * std::numbers::pi / 180.0;
  const double dx = std::sin(theta), dy = std::cos(theta);
  const double len = static_cast<double>(cfg.streak_length_px);
  for (std::int64_t s = 0; s < cfg.streak_count; ++s) {
    // Start points range past the borders so streaks may enter from outside.
    const double x0 = rng.uniform(-len, static_cast<double>(width) + len);
    const double y0 = rng.uniform(-len, static_cast<double>(height));
    for (double t = 0.0; t < len; t += 0.5) {
      const auto x = static_cast<std::int64_t>(std::floor(x0 + t * dx + 0.5));
      const auto y = static_cast<std::int64_t>(std::floor(y0 + t * dy + 0.5));
      if (x < 0 || y < 0 || x >= width || y >= height) continue;
      double& v = layer.at(y, x);
      v = std::max(v, cfg.streak_intensity);
    }
  }
  return layer;
}

Plane gaussian_blur(const Plane& p, double sigma) {
  if (sigma <= 0.0) return p;
  const auto radius = static_cast<std::int64_t>(std::ceil(3.0 * sigma));
  std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
  double total = 0.0;
  for (std::int64_t i = -radius; i <= radius; ++i) {
    const double v = std::exp(-0.5 * static_cast<double>(i * i) / (sigma * sigma));
    kernel[static_cast<std::size_t>(i + radius)] = v;
    total += v;
  }
  for (double& v : kernel) v /= total;

  Plane tmp{p.height, p.width, std::vector<double>(p.values.size(), 0.0)};
  for (std::int64_t y = 0; y < p.height; ++y) {
    for (std::int64_t x = 0; x < p.width; ++x) {
      double s = 0.0;
      for (std::int64_t i = -radius; i <= radius; ++i) {
        s += kernel[static_cast<std::size_t>(i + radius)] * p.at(y, reflect(x + i, p.width));
      }
      tmp.at(y, x) = s;
    }
  }
  Plane out{p.height, p.width, std::vector<double>(p.values.size(), 0.0)};
  for (std::int64_t y = 0; y < p.height; ++y) {
    for (std::int64_t x = 0; x < p.width; ++x) {
      double s = 0.0;
      for (std::int64_t i = -radius; i <= radius; ++i) {
        s += kernel[static_cast<std::size_t>(i + radius)] * tmp.at(reflect(y + i, p.height), x);
      }
      out.at(y, x) = s;
    }
  }
  return out;
}

Plane accumulation_layer(std::int64_t height, std::int64_t width, const RainSynthesisConfig& cfg) {
  cfg.validate();
  Plane veil{height, width, std::vector<double>(static_cast<std::size_t>(height * width), 0.0)};
  if (cfg.accumulation_strength == 0.0) return veil;
  if (cfg.accumulation_sigma == 0.0) {
    std::fill(veil.values.begin(), veil.values.end(), cfg.accumulation_strength);
    return veil;
  }
  Rng rng(derive_seed(cfg.seed, kVeilStream));
  for (double& v : veil.values) v = rng.normal();
  veil = gaussian_blur(veil, cfg.accumulation_sigma);
  const auto [lo, hi] = std::minmax_element(veil.values.begin(), veil.values.end());
  const double vmin = *lo, span = *hi - *lo;
  for (double& v : veil.values) {
    const double norm = span > 0.0 ? (v - vmin) / span : 1.0;
    v = cfg.accumulation_strength * (0.5 + 0.5 * norm);
  }
  return veil;
}

PairedSample synthesize_rain(const Image& clean_in, const RainSynthesisConfig& cfg) {
  const Image clean = to_unit(clean_in);
  clean.validate();
  const Plane streaks = streak_layer(clean.height, clean.width, cfg);
  const Plane veil = accumulation_layer(clean.height, clean.width, cfg);
  Image rainy = clean;
  for (std::int64_t i = 0; i < clean.height * clean.width; ++i) {
    const double add = streaks.values[static_cast<std::size_t>(i)] + veil.values[static_cast<std::size_t>(i)];
    if (add == 0.0) continue;
    for (int c = 0; c < 3; ++c) {
      double& v = rainy.pixels[static_cast<std::size_t>(3 * i + c)];
      v = std::clamp(v + add, 0.0, 1.0);
    }
  }
  return {"", std::move(rainy), clean};
}

Image make_clean_scene(std::int64_t height, std::int64_t width, std::uint64_t seed) {
  Rng rng(mix_seed(seed));
  Image img(height, width, ValueRange::unit);
  double top[3], bottom[3];
  for (int c = 0; c < 3; ++c) {
    top[c] = rng.uniform(0.1, 0.7);
    bottom[c] = rng.uniform(0.1, 0.7);
  }
  const double fx = rng.uniform(0.5, 3.0) * 2.0 * std::numbers::pi / static_cast<double>(width);
  const double fy = rng.uniform(0.5, 3.0) * 2.0 * std::numbers::pi / static_cast<double>(height);
  const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double wave = rng.uniform(0.02, 0.1);
  for (std::int64_t y = 0; y < height; ++y) {
    const double t = height > 1 ? static_cast<double>(y) / static_cast<double>(height - 1) : 0.0;
    for (std::int64_t x = 0; x < width; ++x) {
      const double s = wave * std::sin(fx * static_cast<double>(x) + fy * static_cast<double>(y) + phase);
      for (int c = 0; c < 3; ++c) img.at(y, x, c) = (1.0 - t) * top[c] + t * bottom[c] + s;
    }
  }

  const std::int64_t shapes = 3 + rng.below(5);
  for (std::int64_t k = 0; k < shapes; ++k) {
    double color[3];
    for (double& c : color) c = rng.uniform(0.05, 0.8);
    const double cx = rng.uniform(0.0, static_cast<double>(width));
    const double cy = rng.uniform(0.0, static_cast<double>(height));
    const double ry = rng.uniform(0.08, 0.3) * static_cast<double>(height);
    const double rx = rng.uniform(0.08, 0.3) * static_cast<double>(width);
    const bool ellipse = rng.coin();
    const bool striped = rng.uniform() < 0.3;
    const double period = rng.uniform(3.0, 8.0);
    for (std::int64_t y = 0; y < height; ++y) {
      for (std::int64_t x = 0; x < width; ++x) {
        const double u = (static_cast<double>(x) - cx) / rx;
        const double v = (static_cast<double>(y) - cy) / ry;
        const bool inside = ellipse ? (u * u + v * v <= 1.0) : (std::abs(u) <= 1.0 && std::abs(v) <= 1.0);
        if (!inside) continue;
        const double shade =
            striped ? 0.75 + 0.25 * std::sin(2.0 * std::numbers::pi * static_cast<double>(x + y) / period)
                    : 1.0;
        for (int c = 0; c < 3; ++c) img.at(y, x, c) = color[c] * shade;
      }
    }
  }
  for (double& v : img.pixels) v = std::clamp(v + 0.01 * rng.normal(), 0.05, 0.8);
  return img;
}

}  // namespace afenet
