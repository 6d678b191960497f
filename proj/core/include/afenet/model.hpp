#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "afenet/fam.hpp"
#include "afenet/fdm.hpp"
#include "afenet/fem.hpp"
#include "afenet/image.hpp"
#include "afenet/model_config.hpp"
#include "afenet/param_store.hpp"

namespace afenet {

/// The deraining network and its ablation variants.
///
///   full  decompose -> cross-band enhance -> aggregate -> head
///   S1    stem conv -> one enhancement branch -> FAM blocks -> head
///   S2    as full, with the fixed DCT band split
///   S3    as full, bands enhanced independently
///   S4    as full, aggregation replaced by the band merge projection
///
/// With `global_residual` the head output is added to the input image.
/// Parameters are registered in a ParamStore owned by the model; their
/// initial values are a pure function of the config (including init_seed).
class Afenet {
 public:
  explicit Afenet(ModelConfig cfg);
  Afenet(const Afenet&) = delete;
  Afenet& operator=(const Afenet&) = delete;
  Afenet(Afenet&&) = default;
  Afenet& operator=(Afenet&&) = default;

  const ModelConfig& config() const { return cfg_; }
  ParamStore& params() { return store_; }
  const ParamStore& params() const { return store_; }
  std::int64_t parameter_count() const { return store_.scalar_count(); }

  /// Unclipped training forward on an (N, 3, H, W) batch, H and W
  /// divisible by 4.
  Var forward(const Var& image) const;

  /// Band decomposition used by the variant (throws Unsupported for S1).
  BandSet decompose(const Var& image) const;

  /// No-grad forward clipped to [0, 1].
  Tensor infer(const Tensor& image) const;

  /// Reflect-pads to a multiple of 4, runs `infer`, and crops back.
  Image derain(const Image& rainy) const;

 private:
  Var features(const Var& image) const;

  ModelConfig cfg_;
  ParamStore store_;
  std::optional<FrequencyDecomposition> fdm_;
  std::optional<DctDecomposition> dct_;
  std::optional<CrossBandEnhancement> fem_;
  std::optional<FrequencyAggregation> fam_;
  std::optional<BandMerge> fuse_;
  std::optional<Conv2d> stem_;
  std::optional<EnhanceBranch> single_;
  std::vector<FamBlock> single_fam_;
  Conv2d head_;
};

}  // namespace afenet
