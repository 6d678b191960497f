#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "afenet/image.hpp"
#include "afenet/rain.hpp"
#include "afenet/tensor.hpp"

namespace afenet {

/// Sorted stems of the *.png files directly inside `dir`.
std::vector<std::string> list_png_stems(const std::filesystem::path& dir);

/// Loads `<root>/rainy/<stem>.png` + `<root>/clean/<stem>.png` pairs in stem
/// order, converted to the unit range. Missing directories raise NotFound,
/// unmatched stems raise InvalidArgument.
std::vector<PairedSample> load_paired_dir(const std::filesystem::path& root);

void save_paired_dir(const std::filesystem::path& root, const std::vector<PairedSample>& pairs);

/// Rain parameters drawn per image for the bundled synthetic corpus.
RainSynthesisConfig random_rain_config(std::uint64_t seed);

/// `count` procedural scenes with synthetic rain, named pair_0000, ...
std::vector<PairedSample> make_synthetic_pairs(std::int64_t count, std::int64_t height,
                                               std::int64_t width, std::uint64_t seed);

struct Batch {
  Tensor rainy;  ///< (N, 3, P, P)
  Tensor clean;
};

/// Draws training batches as a pure function of (seed, step): pair choice,
/// crop position and flips never depend on call history.
class BatchSampler {
 public:
  BatchSampler(const std::vector<PairedSample>& pairs, std::int64_t patch_size,
               std::int64_t batch_size, bool flips, std::uint64_t seed);

  Batch batch(std::int64_t step) const;

 private:
  const std::vector<PairedSample>* pairs_;
  std::int64_t patch_size_;
  std::int64_t batch_size_;
  bool flips_;
  std::uint64_t seed_;
};

}  // namespace afenet
