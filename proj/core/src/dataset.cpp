#include "afenet/dataset.hpp"

#include <algorithm>
#include <cstdio>

#include "afenet/error.hpp"
#include "afenet/rng.hpp"

namespace fs = std::filesystem;

namespace afenet {

std::vector<std::string> list_png_stems(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw NotFound("directory not found: " + dir.string());
  std::vector<std::string> stems;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".png") {
      stems.push_back(entry.path().stem().string());
    }
  }
  std::sort(stems.begin(), stems.end());
  return stems;
}

std::vector<PairedSample> load_paired_dir(const fs::path& root) {
  if (!fs::is_directory(root)) throw NotFound("dataset root not found: " + root.string());
  const auto rainy = list_png_stems(root / "rainy");
  const auto clean = list_png_stems(root / "clean");
  std::vector<std::string> unmatched;
  std::set_symmetric_difference(rainy.begin(), rainy.end(), clean.begin(), clean.end(),
                                std::back_inserter(unmatched));
  if (!unmatched.empty()) {
    std::string msg = "unmatched stems under " + root.string() + ":";
    for (const auto& s : unmatched) msg += " " + s;
    throw InvalidArgument(msg);
  }
  std::vector<PairedSample> pairs;
  pairs.reserve(rainy.size());
  for (const auto& stem : rainy) {
    PairedSample p{stem, to_unit(load_image(root / "rainy" / (stem + ".png"))),
                   to_unit(load_image(root / "clean" / (stem + ".png")))};
    p.validate();
    pairs.push_back(std::move(p));
  }
  return pairs;
}

void save_paired_dir(const fs::path& root, const std::vector<PairedSample>& pairs) {
  fs::create_directories(root / "rainy");
  fs::create_directories(root / "clean");
  for (const auto& p : pairs) {
    save_image(p.rainy, root / "rainy" / (p.name + ".png"));
    save_image(p.clean, root / "clean" / (p.name + ".png"));
  }
}

RainSynthesisConfig random_rain_config(std::uint64_t seed) {
  Rng rng(mix_seed(seed));
  RainSynthesisConfig cfg;
  cfg.streak_count = 40 + rng.below(60);
  cfg.streak_length_px = 6 + rng.below(10);
  cfg.streak_angle_deg = rng.uniform(-25.0, 25.0);
  cfg.streak_intensity = rng.uniform(0.3, 0.6);
  cfg.accumulation_sigma = rng.uniform(4.0, 12.0);
  cfg.accumulation_strength = rng.uniform(0.05, 0.2);
  cfg.seed = rng.next_u64();
  return cfg;
}

std::vector<PairedSample> make_synthetic_pairs(std::int64_t count, std::int64_t height,
                                               std::int64_t width, std::uint64_t seed) {
  std::vector<PairedSample> pairs;
  pairs.reserve(static_cast<std::size_t>(count));
  for (std::int64_t i = 0; i < count; ++i) {
    const Image clean = make_clean_scene(height, width, derive_seed(seed, 0x5CE7E, i));
    PairedSample p = synthesize_rain(clean, random_rain_config(derive_seed(seed, 0x7A17, i)));
    char name[32];
    std::snprintf(name, sizeof(name), "pair_%04lld", static_cast<long long>(i));
    p.name = name;
    pairs.push_back(std::move(p));
  }
  return pairs;
}

BatchSampler::BatchSampler(const std::vector<PairedSample>& pairs, std::int64_t patch_size,
                           std::int64_t batch_size, bool flips, std::uint64_t seed)
    : pairs_(&pairs), patch_size_(patch_size), batch_size_(batch_size), flips_(flips), seed_(seed) {
  if (pairs.empty()) throw InvalidArgument("BatchSampler: empty dataset");
  if (batch_size < 1) throw InvalidArgument("BatchSampler: batch size must be positive");
  for (const auto& p : pairs) {
    if (p.clean.height < patch_size || p.clean.width < patch_size) {
      throw InvalidArgument("BatchSampler: image '" + p.name + "' smaller than patch size " +
                            std::to_string(patch_size));
    }
  }
}

Batch BatchSampler::batch(std::int64_t step) const {
  std::vector<Image> rainy, clean;
  rainy.reserve(static_cast<std::size_t>(batch_size_));
  clean.reserve(static_cast<std::size_t>(batch_size_));
  for (std::int64_t b = 0; b < batch_size_; ++b) {
    Rng rng(derive_seed(seed_, static_cast<std::uint64_t>(step), static_cast<std::uint64_t>(b)));
    const auto& pair = (*pairs_)[static_cast<std::size_t>(rng.below(static_cast<std::int64_t>(pairs_->size())))];
    PairedSample patch = sample_patch_pair(pair, patch_size_, rng.next_u64());
    if (flips_) {
      const bool fh = rng.coin();
      const bool fv = rng.coin();
      patch = augment_flip(patch, fh, fv);
    }
    rainy.push_back(std::move(patch.rainy));
    clean.push_back(std::move(patch.clean));
  }
  return {images_to_tensor(rainy), images_to_tensor(clean)};
}

}  // namespace afenet
