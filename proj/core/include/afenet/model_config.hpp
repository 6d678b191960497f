#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace afenet {

/// Architecture variant. `full` is the complete network; S1-S4 are the
/// ablations: S1 no frequency decomposition (one full-resolution branch),
/// S2 DCT band split instead of strided convolutions, S3 no cross-band
/// interaction, S4 aggregation replaced by concatenation + 1x1 projection.
enum class Variant { full, S1, S2, S3, S4 };

/// How an enhanced lower band is merged into the next higher band.
enum class CombineMode { concat_project, multiply };

const char* to_string(Variant v);
const char* to_string(CombineMode m);
Variant parse_variant(const std::string& s);
CombineMode parse_combine(const std::string& s);

struct FemBlockConfig {
  std::int64_t channels = 16;
  std::int64_t heads = 2;
  double expansion = 2.66;
  std::int64_t blocks_per_band = 4;
  bool attention_l2norm = true;

  /// Gated feed-forward hidden width, round(channels * expansion).
  std::int64_t hidden() const;
  void validate() const;
};

struct ModelConfig {
  std::int64_t channels = 16;
  std::int64_t heads = 2;
  double expansion = 2.66;
  std::int64_t blocks_per_band = 4;
  CombineMode combine = CombineMode::concat_project;
  std::int64_t fam_splits = 4;
  std::vector<std::int64_t> fam_scales{2, 4, 8};
  std::int64_t fam_depth = 2;
  Variant variant = Variant::full;
  bool global_residual = true;
  /// Unit-normalize query/key rows before the channel attention product.
  bool attention_l2norm = true;
  /// Zero the residual-exit projections so every block starts as identity.
  bool zero_init_residual = true;
  bool zero_init_head = true;
  std::uint64_t init_seed = 0;

  FemBlockConfig fem() const;
  void validate() const;

  /// C = 16, the laptop-scale preset.
  static ModelConfig desk();
  /// C = 128 with four blocks per band; shipped for reference, not exercised.
  static ModelConfig full_scale();

  /// Canonical JSON (sorted keys, compact).
  std::string to_json() const;
  /// Missing keys keep their defaults; unknown keys raise ConfigError.
  static ModelConfig from_json(const std::string& text);

  bool operator==(const ModelConfig&) const = default;
};

}  // namespace afenet
